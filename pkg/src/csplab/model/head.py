from __future__ import annotations

from csplab.numcore import Tensor
from csplab.numcore import tensor as T


def head_project(x_seq: Tensor, weight: Tensor, bias: Tensor, k: int, l: int) -> Tensor:
    """Flatten (B, F, P') feature-major, apply one affine map, reshape to (B, 2K, L).

    ``weight`` is stored input-major, (F*P', 2K*L).
    """
    nb = x_seq.shape[0]
    flat = x_seq.reshape(nb, -1)
    if flat.shape[1] != weight.shape[0] or weight.shape[1] != 2 * k * l:
        raise ValueError(f"head weight {weight.shape} does not fit input {flat.shape[1]} -> {2 * k * l}")
    return (T.matmul(flat, weight) + bias).reshape(nb, 2 * k, l)
