"""CSI token mixer, tokenization of both patch branches, positional encoding."""
from __future__ import annotations

import numpy as np

from csplab.model.config import BackboneConfig
from csplab.model.params import Params, block_params
from csplab.numcore import Tensor
from csplab.numcore import tensor as T


def token_mixer_forward(x: Tensor, p: dict[str, Tensor]) -> Tensor:
    """One token-mixer block on (B, 2K, N, P') patches.

    Every patch goes through conv -> ReLU -> conv on its (2K, N) plane; the
    pooled features drive a sigmoid gate with one weight per patch, and the
    gated features are added back onto the input.
    """
    nb, rows, n, pp = x.shape
    if p["fc2.w"].shape[0] != pp:
        raise ValueError(f"gate width {p['fc2.w'].shape[0]} does not match {pp} patches")
    planes = x.transpose(0, 3, 1, 2).reshape(nb * pp, rows, n, 1)
    feat = T.conv2d(T.relu(T.conv2d(planes, p["conv1.w"], p["conv1.b"])), p["conv2.w"], p["conv2.b"])
    feat = feat.reshape(nb, pp, rows, n)
    pooled = feat.mean(axis=(2, 3)).reshape(nb, pp, 1)
    gate = T.sigmoid(T.linear(T.relu(T.linear(pooled, p["fc1.w"], p["fc1.b"])), p["fc2.w"], p["fc2.b"]))
    scaled = feat * gate.reshape(nb, pp, 1, 1)
    return scaled.transpose(0, 2, 3, 1) + x


def positional_encoding(f: int, pp: int) -> np.ndarray:
    """(F, P') sinusoidal table: sin(j / 10000**(i/F)) on even rows i, cos(j / 10000**((i-1)/F)) on odd rows."""
    i = np.arange(f)[:, None]
    j = np.arange(pp)[None, :]
    even = i % 2 == 0
    expo = np.where(even, i, i - 1) / f
    angle = j / 10000.0**expo
    return np.where(even, np.sin(angle), np.cos(angle))


def tokenize(x_f_p: Tensor, x_tau_p: Tensor, params: Params, cfg: BackboneConfig) -> Tensor:
    """Both patch branches -> (B, F, P') embeddings with positional encoding."""
    branches = []
    for name, x in (("tm_f", x_f_p), ("tm_tau", x_tau_p)):
        for i in range(cfg.n_mixer_cascade):
            x = token_mixer_forward(x, block_params(params, f"{name}.{i}"))
        branches.append(x)
    tok = branches[0] + branches[1]
    nb, rows, n, pp = tok.shape
    tok = tok.reshape(nb, rows * n, pp)
    emb = T.linear(tok, params["tok.w"], params["tok.b"])
    return emb + positional_encoding(cfg.F, pp)
