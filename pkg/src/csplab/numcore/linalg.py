"""Complex matrix helpers.

Complex grids are plain ``complex128`` numpy arrays; the only structure this
module adds is the unitary DFT used for the frequency/delay transform.
"""
from __future__ import annotations

import numpy as np


def dft_matrix(k: int) -> np.ndarray:
    """Unitary K-point DFT, entry (m, n) = exp(-2j*pi*m*n/K) / sqrt(K)."""
    if k < 1:
        raise ValueError(f"DFT size must be positive, got {k}")
    idx = np.arange(k)
    # reduce m*n mod K first so large products keep full phase accuracy
    phase = -2.0 * np.pi * (np.outer(idx, idx) % k) / k
    return np.exp(1j * phase) / np.sqrt(k)


def hermitian(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def split_complex(m: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts on a new leading axis: (...) -> (2, ...)."""
    return np.stack([m.real, m.imag])


def merge_complex(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`split_complex`."""
    return x[0] + 1j * x[1]
