"""Dataset generation and the MCSP binary container.

Layout: ``b"MCSP"`` | version (u32 LE) | header length (u32 LE) | UTF-8 JSON
header | samples. Each sample is velocity (f32) followed by the UL history
and DL target grids, K-major, as interleaved (re, im) float32 pairs.
"""
from __future__ import annotations

import dataclasses
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from csplab.chansim.channel import (ArrayGeometry, OfdmNumerology, PathSet, sample_paths,
                                    synth_channel)
from csplab.chansim.observe import DmrsPattern, apply_dmrs_observation, interpolate_pilots
from csplab.numcore.rng import RngStream

MAGIC = b"MCSP"
VERSION = 1


@dataclass
class DatasetConfig:
    count: int = 128  # user realisations; each contributes n_t samples
    K: int = 48
    P: int = 16
    L: int = 4
    n_h: int = 2
    n_v: int = 2
    duplex: str = "tdd"
    velocities: list[float] = field(default_factory=lambda: [float(v) for v in range(10, 101, 10)])
    snr_db: float = 20.0
    n_paths: int = 12
    slot_stride: int = 2
    rb_stride: int = 1
    max_delay: float = 2.5e-6
    delay_decay: float = 1e-6
    f_c: float = 2.4e9
    split: str = "train"

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be nonnegative")
        if min(self.K, self.P, self.L) < 1:
            raise ValueError("K, P and L must be positive")
        if self.duplex not in ("tdd", "fdd"):
            raise ValueError(f"duplex must be 'tdd' or 'fdd', got {self.duplex!r}")
        if not self.velocities:
            raise ValueError("at least one velocity is required")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DatasetConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown dataset config keys: {sorted(unknown)}")
        return cls(**d)

    @property
    def numerology(self) -> OfdmNumerology:
        return OfdmNumerology(f_c=self.f_c, k_ul=self.K, k_dl=self.K, duplex=self.duplex)

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_h, self.n_v)

    @property
    def pattern(self) -> DmrsPattern:
        return DmrsPattern(self.slot_stride, self.rb_stride, self.snr_db)

    @property
    def n_t(self) -> int:
        return self.n_h * self.n_v


@dataclass
class Sample:
    ul_history: np.ndarray  # K x P complex, pilot-observed and densified
    dl_target: np.ndarray  # K x L complex, noiseless
    velocity: float
    antenna_index: int = 0


@dataclass
class Dataset:
    header: dict[str, Any]
    velocity: np.ndarray  # (n,)
    ul: np.ndarray  # (n, K, P) complex128
    dl: np.ndarray  # (n, K, L) complex128

    def __len__(self) -> int:
        return len(self.velocity)

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.ul[i], self.dl[i], float(self.velocity[i]), i % self.header.get("n_t", 1))

    def __iter__(self) -> Iterator[Sample]:
        return (self[i] for i in range(len(self)))

    @property
    def K(self) -> int:
        return self.header["K"]

    @property
    def P(self) -> int:
        return self.header["P"]

    @property
    def L(self) -> int:
        return self.header["L"]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        header = dict(self.header, sample_count=int(idx.size))
        return Dataset(header, self.velocity[idx], self.ul[idx], self.dl[idx])


@dataclass
class UserRealisation:
    velocity: float
    paths: PathSet
    ul_clean: np.ndarray  # (n_t, K, P)
    dl: np.ndarray  # (n_t, K, L)
    ul_observed: np.ndarray  # (n_t, K, P), zeros off-pilot
    mask: np.ndarray  # (K, P)


def synthesize_user(cfg: DatasetConfig, seed: int, index: int) -> UserRealisation:
    """Draw user ``index`` of the ``cfg.split`` split; depends only on (seed, split, index)."""
    rng = RngStream(seed, cfg.split, index)
    velocity = float(rng.choice(np.asarray(cfg.velocities, dtype=np.float64)))
    paths = sample_paths(rng, velocity, cfg.n_paths, cfg.f_c, cfg.max_delay, cfg.delay_decay)
    num, geom = cfg.numerology, cfg.geometry
    ul = synth_channel(paths, "ul", num, geom, np.arange(cfg.P))
    dl = synth_channel(paths, "dl", num, geom, np.arange(cfg.P, cfg.P + cfg.L))
    observed = np.empty_like(ul)
    mask = None
    for a in range(geom.n_t):
        observed[a], mask = apply_dmrs_observation(ul[a], cfg.pattern, rng)
    return UserRealisation(velocity, paths, ul, dl, observed, mask)


def generate_dataset(cfg: DatasetConfig, seed: int, path: str | os.PathLike | None = None) -> Dataset:
    """Synthesize ``cfg.count`` users, one sample per antenna, optionally writing MCSP."""
    n = cfg.count * cfg.n_t
    vel = np.empty(n)
    ul = np.empty((n, cfg.K, cfg.P), dtype=np.complex128)
    dl = np.empty((n, cfg.K, cfg.L), dtype=np.complex128)
    for u in range(cfg.count):
        real = synthesize_user(cfg, seed, u)
        for a in range(cfg.n_t):
            i = u * cfg.n_t + a
            vel[i] = real.velocity
            ul[i] = interpolate_pilots(real.ul_observed[a], real.mask)
            dl[i] = real.dl[a]
    header = {
        "K": cfg.K, "P": cfg.P, "L": cfg.L, "n_t": cfg.n_t, "duplex": cfg.duplex,
        "velocities": list(cfg.velocities), "sample_count": n, "snr_db": cfg.snr_db,
        "seed": int(seed), "split": cfg.split, "n_paths": cfg.n_paths,
        "slot_stride": cfg.slot_stride, "rb_stride": cfg.rb_stride,
    }
    # round through float32 so in-memory data equals what a reader sees
    ds = Dataset(header, vel.astype(np.float32).astype(np.float64),
                 ul.astype(np.complex64).astype(np.complex128),
                 dl.astype(np.complex64).astype(np.complex128))
    if path is not None:
        write_mcsp(ds, path)
    return ds


def _encode_grid(grid: np.ndarray) -> bytes:
    inter = np.empty(grid.shape + (2,), dtype="<f4")
    inter[..., 0] = grid.real
    inter[..., 1] = grid.imag
    return inter.tobytes()


def write_mcsp(ds: Dataset, path: str | os.PathLike) -> int:
    """Write ``ds``; returns bytes written. Raises OSError on unwritable paths."""
    header = dict(ds.header, sample_count=len(ds))
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", VERSION, len(hbytes)), hbytes]
    for i in range(len(ds)):
        chunks.append(struct.pack("<f", ds.velocity[i]))
        chunks.append(_encode_grid(ds.ul[i]))
        chunks.append(_encode_grid(ds.dl[i]))
    blob = b"".join(chunks)
    Path(path).write_bytes(blob)
    return len(blob)


class FormatError(ValueError):
    """A file does not follow the expected binary layout."""


def read_mcsp(path: str | os.PathLike) -> Dataset:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: not an MCSP file")
    version, hlen = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported MCSP version {version}")
    header = json.loads(blob[12:12 + hlen].decode("utf-8"))
    k, p, l, n = header["K"], header["P"], header["L"], header["sample_count"]
    rec = np.dtype([("v", "<f4"), ("ul", "<f4", (k, p, 2)), ("dl", "<f4", (k, l, 2))])
    body = blob[12 + hlen:]
    if len(body) != n * rec.itemsize:
        raise FormatError(f"{path}: expected {n} samples of {rec.itemsize} bytes, found {len(body)} bytes")
    arr = np.frombuffer(body, dtype=rec, count=n)
    ul = arr["ul"][..., 0].astype(np.float64) + 1j * arr["ul"][..., 1].astype(np.float64)
    dl = arr["dl"][..., 0].astype(np.float64) + 1j * arr["dl"][..., 1].astype(np.float64)
    return Dataset(header, arr["v"].astype(np.float64), ul, dl)
