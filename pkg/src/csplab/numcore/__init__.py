"""Numerical substrate: autodiff tensors, DFT, Adam, RNG streams, byte tracking."""
from csplab.numcore.gradcheck import NumericFailure, grad_check
from csplab.numcore.linalg import dft_matrix, hermitian, merge_complex, split_complex
from csplab.numcore.memory import AllocCounter, TrackingError, with_alloc_tracking
from csplab.numcore.optim import Adam, AdamState, adam_step
from csplab.numcore.rng import RngStream, stream_key
from csplab.numcore.tensor import Tensor, grad_enabled, no_grad

__all__ = [
    "Adam", "AdamState", "AllocCounter", "NumericFailure", "RngStream", "Tensor",
    "TrackingError", "adam_step", "dft_matrix", "grad_check", "grad_enabled",
    "hermitian", "merge_complex", "no_grad", "split_complex", "stream_key",
    "with_alloc_tracking",
]
