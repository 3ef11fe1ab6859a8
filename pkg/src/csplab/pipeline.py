"""Conversions between complex CSI grids and real model inputs/outputs.

Forward direction: frequency grid -> (frequency, delay) real stacks ->
per-sample scalar normalisation -> merged 2K x P rows -> temporal patches.
Backward direction: 2K x L prediction -> de-normalisation -> complex grid.

All functions accept optional leading batch axes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from csplab.numcore import NumericFailure, dft_matrix

SIGMA_FLOOR = 1e-8


@dataclass
class NormStats:
    mu: np.ndarray | float
    sigma: np.ndarray | float


@dataclass
class PatchedInput:
    x_f_p: np.ndarray  # (..., 2K, N, P')
    x_tau_p: np.ndarray
    norm_f: NormStats
    norm_tau: NormStats
    N: int
    P_prime: int


def to_freq_delay(h_f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a (..., K, P) frequency grid into real (..., 2, K, P) frequency and delay stacks.

    The delay representation is ``F^H @ h_f`` with the unitary DFT, so both
    stacks carry the same energy.
    """
    h_f = np.asarray(h_f)
    if not np.all(np.isfinite(h_f)):
        raise NumericFailure("CSI grid contains non-finite values")
    k = h_f.shape[-2]
    h_tau = np.conj(dft_matrix(k)).T @ h_f
    x_f = np.stack([h_f.real, h_f.imag], axis=-3)
    x_tau = np.stack([h_tau.real, h_tau.imag], axis=-3)
    return x_f, x_tau


def normalize(x: np.ndarray, batch_dims: int = 0) -> tuple[np.ndarray, NormStats]:
    """Scalar z-score per sample; the first ``batch_dims`` axes index samples."""
    x = np.asarray(x, dtype=np.float64)
    axes = tuple(range(batch_dims, x.ndim))
    mu = x.mean(axis=axes)
    sigma = np.maximum(x.std(axis=axes), SIGMA_FLOOR)
    expand = (...,) + (None,) * len(axes)
    x_norm = (x - np.asarray(mu)[expand]) / np.asarray(sigma)[expand]
    if batch_dims == 0:
        mu, sigma = float(mu), float(sigma)
    return x_norm, NormStats(mu, sigma)


def denormalize(x, stats: NormStats, sample_ndim: int):
    """``x * sigma + mu`` with stats broadcast over the trailing ``sample_ndim`` axes.

    Works for numpy arrays and autodiff tensors alike.
    """
    expand = (...,) + (None,) * sample_ndim
    sigma = np.asarray(stats.sigma, dtype=np.float64)[expand]
    mu = np.asarray(stats.mu, dtype=np.float64)[expand]
    return x * sigma + mu


def merge_features(x: np.ndarray) -> np.ndarray:
    """(..., 2, K, P) -> (..., 2K, P): real rows first, then imaginary rows."""
    return x.reshape(x.shape[:-3] + (x.shape[-3] * x.shape[-2], x.shape[-1]))


def patch_count(p: int, n: int) -> int:
    return math.ceil(p / n)


def patchify(x: np.ndarray, n: int) -> np.ndarray:
    """(..., C, P) -> (..., C, N, P'); patch p holds slots p*N .. p*N+N-1, zero-padded at the end."""
    p = x.shape[-1]
    if n < 1:
        raise ValueError("patch size must be positive")
    if n > p:
        raise ValueError(f"patch size {n} exceeds sequence length {p}")
    pp = patch_count(p, n)
    if pp * n != p:
        widths = [(0, 0)] * (x.ndim - 1) + [(0, pp * n - p)]
        x = np.pad(x, widths)
    x = x.reshape(x.shape[:-1] + (pp, n))
    return np.swapaxes(x, -1, -2)


def unpatchify(x: np.ndarray, p: int) -> np.ndarray:
    """Inverse of :func:`patchify`; drops any padding beyond ``p`` slots."""
    x = np.swapaxes(x, -1, -2)
    x = x.reshape(x.shape[:-2] + (x.shape[-2] * x.shape[-1],))
    return x[..., :p]


def preprocess(h_f: np.ndarray, patch_size: int) -> PatchedInput:
    """Full input path for one (K, P) grid or a (B, K, P) batch."""
    h_f = np.asarray(h_f)
    batch_dims = h_f.ndim - 2
    x_f, x_tau = to_freq_delay(h_f)
    x_f, norm_f = normalize(x_f, batch_dims)
    x_tau, norm_tau = normalize(x_tau, batch_dims)
    pf = patchify(merge_features(x_f), patch_size)
    ptau = patchify(merge_features(x_tau), patch_size)
    return PatchedInput(pf, ptau, norm_f, norm_tau, patch_size, pf.shape[-1])


def finalize_prediction(x_hat: np.ndarray, stats: NormStats) -> np.ndarray:
    """(..., 2K, L) normalised prediction -> (..., K, L) complex grid."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_hat.ndim < 2 or x_hat.shape[-2] % 2:
        raise ValueError(f"expected a (2K, L) prediction, got shape {x_hat.shape}")
    k = x_hat.shape[-2] // 2
    x = x_hat.reshape(x_hat.shape[:-2] + (2, k, x_hat.shape[-1]))
    x = denormalize(x, stats, 3)
    return x[..., 0, :, :] + 1j * x[..., 1, :, :]


def split_target(h: np.ndarray) -> np.ndarray:
    """(..., K, L) complex -> (..., 2K, L) real, the layout the head predicts."""
    return np.concatenate([h.real, h.imag], axis=-2)
