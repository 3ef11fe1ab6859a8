"""Multipath MISO-OFDM channel synthesis.

The channel on RB k, slot s, for every antenna of a uniform planar array is a
sum over paths of complex gain x array response x delay phase x Doppler phase.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from csplab.numcore.rng import RngStream

SPEED_OF_LIGHT = 3e8

Duplex = Literal["tdd", "fdd"]
Band = Literal["ul", "dl"]


@dataclass(frozen=True)
class OfdmNumerology:
    f_c: float = 2.4e9
    delta_f: float = 15e3
    n_sc_per_rb: int = 12
    k_ul: int = 48
    k_dl: int = 48
    t_slot: float = 1e-3
    duplex: Duplex = "tdd"

    @property
    def rb_bandwidth(self) -> float:
        return self.n_sc_per_rb * self.delta_f

    def band_bandwidth(self, band: Band = "ul") -> float:
        return (self.k_ul if band == "ul" else self.k_dl) * self.rb_bandwidth

    def rb_frequencies(self, band: Band) -> np.ndarray:
        """Center frequency of every RB in ``band``.

        The UL band is centred on ``f_c``. In FDD the DL band starts where the
        UL band ends; in TDD both directions share the UL frequencies.
        """
        b = self.rb_bandwidth
        ul_lo = self.f_c - self.k_ul * b / 2
        if band == "ul" or self.duplex == "tdd":
            k = self.k_ul if band == "ul" else self.k_dl
            if k > self.k_ul:
                raise ValueError("TDD downlink cannot use more RBs than the shared band")
            return ul_lo + (np.arange(k) + 0.5) * b
        dl_lo = ul_lo + self.k_ul * b
        return dl_lo + (np.arange(self.k_dl) + 0.5) * b


@dataclass(frozen=True)
class ArrayGeometry:
    n_h: int = 2
    n_v: int = 2
    spacing: float = 0.5  # wavelengths

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise ValueError("array needs at least one element per axis")

    @property
    def n_t(self) -> int:
        return self.n_h * self.n_v


def upa_steering(theta, phi, geom: ArrayGeometry) -> np.ndarray:
    """Array response for departure azimuth ``theta`` and elevation ``phi``.

    Element (m, n) of the n_h x n_v grid, flattened m-major, carries phase
    ``2*pi*spacing*(m*sin(theta)*cos(phi) + n*sin(phi))``. Vectorised over
    angle arrays: output shape is ``theta.shape + (n_t,)``.
    """
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    m = np.repeat(np.arange(geom.n_h), geom.n_v)
    n = np.tile(np.arange(geom.n_v), geom.n_h)
    u = (np.sin(theta) * np.cos(phi))[..., None]
    w = np.sin(phi)[..., None]
    return np.exp(1j * np.pi * geom.spacing * 2 * (m * u + n * w))


@dataclass
class PathSet:
    alpha: np.ndarray  # complex gains
    tau: np.ndarray  # delays, s
    theta: np.ndarray  # azimuth of departure, rad
    phi: np.ndarray  # elevation of departure, rad
    f_d: np.ndarray  # Doppler shift, Hz

    def __post_init__(self):
        n = len(self.alpha)
        if n < 1:
            raise ValueError("a path set needs at least one path")
        if any(len(a) != n for a in (self.tau, self.theta, self.phi, self.f_d)):
            raise ValueError("path parameter arrays differ in length")
        if np.any(self.tau < 0):
            raise ValueError("path delays must be nonnegative")

    def __len__(self) -> int:
        return len(self.alpha)

    @classmethod
    def single(cls, alpha: complex = 1.0, tau: float = 0.0, theta: float = 0.0,
               phi: float = 0.0, f_d: float = 0.0) -> "PathSet":
        return cls(*(np.atleast_1d(np.asarray(v)) for v in (complex(alpha), tau, theta, phi, f_d)))


def max_doppler(velocity_kmh: float, f_c: float) -> float:
    return velocity_kmh / 3.6 * f_c / SPEED_OF_LIGHT


def sample_paths(rng: RngStream, velocity: float, n_paths: int = 12, f_c: float = 2.4e9,
                 max_delay: float = 2.5e-6, delay_decay: float = 1e-6,
                 azimuth_sector: float = np.pi / 3, elevation_sector: float = np.pi / 9) -> PathSet:
    """Draw one multipath realisation.

    Delays are uniform on ``[0, max_delay]`` with an exponential power-delay
    profile (decay constant ``delay_decay``) normalised to unit total expected
    power; each gain is circular complex Gaussian with its profile power.
    Doppler shifts are ``v*f_c/c*cos(psi)`` with uniform arrival angle ``psi``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if velocity < 0:
        raise ValueError("velocity must be nonnegative")
    tau = np.sort(rng.uniform(0.0, max_delay, n_paths))
    power = np.exp(-tau / delay_decay)
    power /= power.sum()
    alpha = rng.complex_normal(n_paths) * np.sqrt(power)
    theta = rng.uniform(-azimuth_sector, azimuth_sector, n_paths)
    phi = rng.uniform(-elevation_sector, elevation_sector, n_paths)
    psi = rng.uniform(0.0, 2 * np.pi, n_paths)
    f_d = max_doppler(velocity, f_c) * np.cos(psi)
    return PathSet(alpha, tau, theta, phi, f_d)


def synth_channel(paths: PathSet, band: Band, numerology: OfdmNumerology, geom: ArrayGeometry,
                  slots: Sequence[int]) -> np.ndarray:
    """Evaluate the multipath sum; returns an (n_t, K, len(slots)) complex array.

    Slot s is sampled at ``t = s * t_slot``. Each output entry is reduced over
    the path axis on its own, so evaluating a subset of slots reproduces the
    corresponding entries of a larger evaluation bit for bit.
    """
    slots = np.asarray(slots)
    if slots.size == 0:
        raise ValueError("slot range is empty")
    f_k = numerology.rb_frequencies(band)
    t_s = slots * numerology.t_slot
    steer = upa_steering(paths.theta, paths.phi, geom)  # (Lp, n_t)
    delay_phase = np.exp(-2j * np.pi * np.outer(f_k, paths.tau))  # (K, Lp)
    doppler_phase = np.exp(2j * np.pi * np.outer(t_s, paths.f_d))  # (S, Lp)
    gain = paths.alpha * steer.T  # (n_t, Lp)
    terms = (gain[:, None, None, :] * delay_phase[None, :, None, :]) * doppler_phase[None, None, :, :]
    return terms.sum(axis=-1)
