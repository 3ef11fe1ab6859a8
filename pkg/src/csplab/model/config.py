from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

VARIANTS = ("hybrid", "plain-ssm", "full-attention")


@dataclass
class BackboneConfig:
    """Architecture descriptor for the whole predictor, backbone plus tokenizer and head.

    ``n_mixer_cascade`` counts stacked token-mixer blocks per branch and is
    unrelated to ``patch_size``. ``freeze_mask`` maps parameter names to
    False for parameters the optimizer must leave untouched.
    """

    variant: str = "hybrid"
    L_M: int = 8
    k: int = 4
    H: int = 2
    F: int = 64
    S: int = 16
    patch_size: int = 4
    n_mixer_cascade: int = 2
    K: int = 48
    P: int = 16
    L: int = 4
    expand: int = 2
    conv_width: int = 4
    c_mid: int = 8
    reduction: int = 2
    freeze_mask: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.variant == "hybrid" and self.k < 1:
            raise ValueError("hybrid backbone needs a mixer interval k >= 1")
        if self.F % self.H:
            raise ValueError(f"head count {self.H} must divide width {self.F}")
        if self.L_M < 1:
            raise ValueError("need at least one block")
        if not 1 <= self.patch_size <= self.P:
            raise ValueError("patch size must lie in [1, P]")
        if self.n_mixer_cascade < 1:
            raise ValueError("token-mixer cascade depth must be positive")

    @property
    def P_prime(self) -> int:
        return math.ceil(self.P / self.patch_size)

    @property
    def E(self) -> int:
        return self.expand * self.F

    @property
    def d_h(self) -> int:
        return self.F // self.H

    @property
    def gate_hidden(self) -> int:
        return math.ceil(self.P_prime / self.reduction)

    def mixer_positions(self) -> list[int]:
        """1-based block indices after which a patch mixer is residual-added."""
        if self.variant != "hybrid":
            return []
        return list(range(self.k, self.L_M + 1, self.k))

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BackboneConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)
