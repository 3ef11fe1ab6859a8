"""Pilot observation of the uplink history and densification back to a full grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from csplab.numcore.rng import RngStream


@dataclass(frozen=True)
class DmrsPattern:
    slot_stride: int = 2
    rb_stride: int = 1
    snr_db: float = 20.0

    def __post_init__(self):
        if self.slot_stride < 1 or self.rb_stride < 1:
            raise ValueError("pilot strides must be >= 1")

    def mask(self, k: int, p: int) -> np.ndarray:
        """Boolean K x P pilot mask; pilots sit on RB 0, rb_stride, ... and slot 0, slot_stride, ..."""
        rows = np.arange(k) % self.rb_stride == 0
        cols = np.arange(p) % self.slot_stride == 0
        return np.outer(rows, cols)


def apply_dmrs_observation(csi: np.ndarray, pattern: DmrsPattern,
                           rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Observe ``csi`` (K x P) on the pilot grid with complex Gaussian noise.

    Noise power is set from the mean pilot power of this grid and
    ``pattern.snr_db``; an infinite SNR disables noise. Non-pilot entries of
    the returned grid are zero and flagged False in the mask.
    """
    mask = pattern.mask(*csi.shape)
    observed = np.zeros_like(csi, dtype=np.complex128)
    pilots = csi[mask]
    if np.isfinite(pattern.snr_db):
        power = np.mean(np.abs(pilots) ** 2)
        noise_var = power / 10 ** (pattern.snr_db / 10)
        pilots = pilots + rng.complex_normal(pilots.shape, noise_var)
    observed[mask] = pilots
    return observed, mask


def interpolate_pilots(observed: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Fill a sparsely observed K x P grid.

    Each RB row with pilots is linearly interpolated along slots (real and
    imaginary parts separately, held constant past the outermost pilots). Rows
    without pilots are then filled the same way along the RB axis.
    """
    if not mask.any():
        raise ValueError("pilot mask is empty")
    k, p = observed.shape
    out = np.zeros((k, p), dtype=np.complex128)
    slots = np.arange(p)
    rows = mask.any(axis=1)
    for r in np.flatnonzero(rows):
        s = np.flatnonzero(mask[r])
        v = observed[r, s]
        out[r] = np.interp(slots, s, v.real) + 1j * np.interp(slots, s, v.imag)
    if not rows.all():
        have = np.flatnonzero(rows)
        rb = np.arange(k)
        for c in range(p):
            v = out[have, c]
            out[:, c] = np.interp(rb, have, v.real) + 1j * np.interp(rb, have, v.imag)
    return out
