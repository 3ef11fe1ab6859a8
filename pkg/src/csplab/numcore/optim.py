from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from csplab.numcore.tensor import Tensor


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(param: Tensor, grad: np.ndarray, state: AdamState) -> tuple[Tensor, AdamState]:
    """One bias-corrected Adam update, applied to ``param.data`` in place.

    Returns the same ``param`` and ``state`` objects for convenience.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != param.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameter {param.shape}")
    if state.m is None:
        state.m = np.zeros_like(param.data)
        state.v = np.zeros_like(param.data)
    elif state.m.shape != param.shape:
        raise ValueError("Adam moments were created for a different parameter shape")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    param.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return param, state


@dataclass
class Adam:
    """Adam over a named parameter dict; frozen names are skipped."""

    params: dict[str, Tensor]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    frozen: frozenset[str] = frozenset()
    states: dict[str, AdamState] = field(default_factory=dict)

    def __post_init__(self):
        for name in self.params:
            self.states[name] = AdamState(self.lr, self.beta1, self.beta2, self.eps)

    def step(self) -> None:
        for name, p in self.params.items():
            if name in self.frozen or p.grad is None:
                continue
            adam_step(p, p.grad, self.states[name])

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
