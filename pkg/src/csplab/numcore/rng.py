"""Counter-based random streams.

A stream is fully determined by ``(seed, stream_id)``: draws never depend on
how many other streams were created or consumed before it. Backed by numpy's
Philox generator keyed through :class:`numpy.random.SeedSequence`.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream_key(name: str) -> int:
    """Stable 32-bit id for a named stream (``"init/ssm.3"``, ``"shuffle"``...)."""
    return zlib.crc32(name.encode("utf-8"))


class RngStream:
    def __init__(self, seed: int, stream_id: int | str = 0, *sub: int | str):
        self.seed = int(seed)
        ids = [stream_key(s) if isinstance(s, str) else int(s) for s in (stream_id, *sub)]
        self.stream_id = tuple(ids)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        self._gen = np.random.Generator(np.random.Philox(seq))

    @property
    def counter(self) -> int:
        """Philox block counter; advances as draws are consumed."""
        return int(self._gen.bit_generator.state["state"]["counter"][0])

    def child(self, *sub: int | str) -> "RngStream":
        return RngStream(self.seed, *self.stream_id, *sub)

    # thin forwarding layer; keeps call sites independent of numpy's API
    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def complex_normal(self, size=None, var: float = 1.0) -> np.ndarray:
        """Circularly-symmetric complex Gaussian with E|z|^2 = ``var``."""
        s = np.sqrt(var / 2.0)
        return self._gen.normal(0.0, s, size) + 1j * self._gen.normal(0.0, s, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def choice(self, a, size=None, replace=True):
        return self._gen.choice(a, size=size, replace=replace)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
