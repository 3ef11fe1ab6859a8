"""Parameter construction.

Each parameter draws from its own named random stream, so two models built
from the same seed share every parameter they have in common (for instance a
hybrid and a plain-SSM backbone share all SSM blocks).
"""
from __future__ import annotations

import numpy as np

from csplab.model.config import BackboneConfig
from csplab.numcore import RngStream, Tensor

Params = dict[str, Tensor]

DELTA_INIT = 0.05


def _uniform(rng: RngStream, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


def _kaiming(rng: RngStream, shape, fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), shape)


class _Builder:
    def __init__(self, seed: int):
        self.seed = seed
        self.params: Params = {}

    def rng(self, name: str) -> RngStream:
        return RngStream(self.seed, "init", name)

    def add(self, name: str, value: np.ndarray) -> None:
        self.params[name] = Tensor(np.array(value, dtype=np.float64), requires_grad=True)

    def linear(self, name: str, out: int, inp: int, bias: bool = False) -> None:
        self.add(f"{name}.w", _uniform(self.rng(f"{name}.w"), (out, inp), inp))
        if bias:
            self.add(f"{name}.b", np.zeros(out))

    def norm(self, name: str, width: int) -> None:
        self.add(f"{name}.scale", np.ones(width))
        self.add(f"{name}.offset", np.zeros(width))


def _token_mixer(b: _Builder, prefix: str, cfg: BackboneConfig) -> None:
    c = cfg.c_mid
    b.add(f"{prefix}.conv1.w", _kaiming(b.rng(f"{prefix}.conv1.w"), (c, 1, 3, 3), 9))
    b.add(f"{prefix}.conv1.b", np.zeros(c))
    b.add(f"{prefix}.conv2.w", _kaiming(b.rng(f"{prefix}.conv2.w"), (1, c, 3, 3), 9 * c))
    b.add(f"{prefix}.conv2.b", np.zeros(1))
    b.linear(f"{prefix}.fc1", cfg.gate_hidden, cfg.P_prime, bias=True)
    b.linear(f"{prefix}.fc2", cfg.P_prime, cfg.gate_hidden, bias=True)


def _ssm_block(b: _Builder, prefix: str, cfg: BackboneConfig) -> None:
    f, e, s = cfg.F, cfg.E, cfg.S
    b.norm(f"{prefix}.norm", f)
    b.linear(f"{prefix}.w_in", e, f)
    b.linear(f"{prefix}.w_gate", e, f)
    b.add(f"{prefix}.conv.w", _uniform(b.rng(f"{prefix}.conv.w"), (e, cfg.conv_width), cfg.conv_width))
    b.add(f"{prefix}.conv.b", np.zeros(e))
    b.linear(f"{prefix}.w_delta", e, e)
    b.add(f"{prefix}.b_delta", np.full(e, np.log(np.expm1(DELTA_INIT))))
    b.linear(f"{prefix}.w_B", s, e)
    b.linear(f"{prefix}.w_C", s, e)
    b.add(f"{prefix}.a_log", np.tile(np.log(np.arange(1, s + 1, dtype=np.float64)), (e, 1)))
    b.add(f"{prefix}.d_skip", np.ones(e))
    b.linear(f"{prefix}.w_out", f, e)


def _mixer(b: _Builder, prefix: str, cfg: BackboneConfig) -> None:
    f = cfg.F
    b.norm(f"{prefix}.norm", f)
    for w in ("w_q", "w_k", "w_v", "w_o"):
        b.linear(f"{prefix}.{w}", f, f)


def _ffn(b: _Builder, prefix: str, cfg: BackboneConfig) -> None:
    b.norm(f"{prefix}.norm", cfg.F)
    b.linear(f"{prefix}.w1", 4 * cfg.F, cfg.F, bias=True)
    b.linear(f"{prefix}.w2", cfg.F, 4 * cfg.F, bias=True)


def init_backbone_params(cfg: BackboneConfig, seed: int) -> Params:
    b = _Builder(seed)
    if cfg.variant == "full-attention":
        for i in range(cfg.L_M):
            _mixer(b, f"attn.{i}", cfg)
            _ffn(b, f"ffn.{i}", cfg)
    else:
        for i in range(cfg.L_M):
            _ssm_block(b, f"ssm.{i}", cfg)
        for j, _ in enumerate(cfg.mixer_positions()):
            _mixer(b, f"mix.{j}", cfg)
    return b.params


def init_params(cfg: BackboneConfig, seed: int) -> Params:
    """All parameters: token mixers, token projection, backbone, prediction head."""
    b = _Builder(seed)
    for branch in ("tm_f", "tm_tau"):
        for i in range(cfg.n_mixer_cascade):
            _token_mixer(b, f"{branch}.{i}", cfg)
    b.linear("tok", cfg.F, 2 * cfg.K * cfg.patch_size, bias=True)
    params = b.params
    params.update(init_backbone_params(cfg, seed))
    fan_in = cfg.F * cfg.P_prime
    params["head.w"] = Tensor(_uniform(b.rng("head.w"), (fan_in, 2 * cfg.K * cfg.L), fan_in), requires_grad=True)
    params["head.b"] = Tensor(np.zeros(2 * cfg.K * cfg.L), requires_grad=True)
    return params


def block_params(params: Params, prefix: str) -> Params:
    """Sub-dict of ``params`` under ``prefix.``, with the prefix stripped."""
    cut = len(prefix) + 1
    return {name[cut:]: p for name, p in params.items() if name.startswith(prefix + ".")}


def frozen_core_mask(params: Params) -> dict[str, bool]:
    """Freeze SSM block internals, leaving norms, mixers, tokenizer and head trainable."""
    mask = {}
    for name in params:
        if name.startswith("ssm.") and ".norm." not in name:
            mask[name] = False
    return mask
