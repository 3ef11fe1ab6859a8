"""Multi-head patch-mixer attention and the feed-forward block of the full-attention baseline."""
from __future__ import annotations

import numpy as np

from csplab.numcore import NumericFailure, Tensor
from csplab.numcore import tensor as T


def patch_mixer_forward(x: Tensor, p: dict[str, Tensor], n_heads: int,
                        return_weights: bool = False):
    """Cross-token attention over column tokens; (B, F, T) -> (B, F, T).

    Each head scores tokens with ``softmax(Q^T K / sqrt(d_h))`` (rows over
    keys), mixes the value vectors, and the concatenated heads are projected
    by ``W_O``. The residual add is the caller's job.
    """
    nb, f, t_len = x.shape
    d_h = f // n_heads
    xn = T.layer_norm(x, p["norm.scale"], p["norm.offset"], axis=-2)
    q = T.linear(xn, p["w_q.w"]).reshape(nb, n_heads, d_h, t_len)
    k = T.linear(xn, p["w_k.w"]).reshape(nb, n_heads, d_h, t_len)
    v = T.linear(xn, p["w_v.w"]).reshape(nb, n_heads, d_h, t_len)
    logits = T.matmul(q.transpose(0, 1, 3, 2), k) * (1.0 / np.sqrt(d_h))  # (B, H, T, T)
    if not np.all(np.isfinite(logits.data)):
        raise NumericFailure("attention logits are not finite")
    weights = T.softmax(logits, axis=-1)
    heads = T.matmul(weights, v.transpose(0, 1, 3, 2))  # (B, H, T, d_h)
    concat = heads.transpose(0, 2, 1, 3).reshape(nb, t_len, f)
    out = T.matmul(concat, p["w_o.w"]).transpose(0, 2, 1)
    return (out, weights) if return_weights else out


def feed_forward(x: Tensor, p: dict[str, Tensor]) -> Tensor:
    """Pre-norm two-layer ReLU MLP with residual."""
    xn = T.layer_norm(x, p["norm.scale"], p["norm.offset"], axis=-2)
    hidden = T.relu(T.linear(xn, p["w1.w"], p["w1.b"]))
    return x + T.linear(hidden, p["w2.w"], p["w2.b"])
