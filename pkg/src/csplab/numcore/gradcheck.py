from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from csplab.numcore.tensor import Tensor


class NumericFailure(ArithmeticError):
    """A computation produced NaN or infinity."""


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, epsilon: float = 1e-5,
               coords: Sequence[int] | None = None) -> float:
    """Max relative error between autodiff and central differences.

    The error for coordinate i is ``|ad_i - cd_i| / max(1, |cd_i|)``. ``coords``
    restricts the check to a subset of flat indices, which keeps checks on
    large weight matrices affordable.
    """
    if not 1e-7 <= epsilon <= 1e-4:
        raise ValueError("epsilon must lie in [1e-7, 1e-4]")
    x.requires_grad = True
    x.grad = None
    out = f(x)
    if not np.all(np.isfinite(out.data)):
        raise NumericFailure("f(x) is not finite")
    out.backward()
    analytic = np.zeros(x.size) if x.grad is None else x.grad.reshape(-1).copy()
    flat = x.data.reshape(-1)
    idx = range(x.size) if coords is None else coords
    worst = 0.0
    for i in idx:
        orig = flat[i]
        flat[i] = orig + epsilon
        fp = float(f(x).data)
        flat[i] = orig - epsilon
        fm = float(f(x).data)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericFailure(f"f is not finite around coordinate {i}")
        numeric = (fp - fm) / (2.0 * epsilon)
        worst = max(worst, abs(analytic[i] - numeric) / max(1.0, abs(numeric)))
    return worst
