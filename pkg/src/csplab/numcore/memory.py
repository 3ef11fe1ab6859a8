"""Byte accounting for tensor buffers.

Only buffers owned by :class:`~csplab.numcore.tensor.Tensor` objects (plus any
workspace explicitly reported through :func:`note_alloc` / :func:`note_free`)
are counted. Counters are thread-local, so measurements on one thread never see
allocations from another.
"""
from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass
from typing import Any, Callable, TypeVar

T = TypeVar("T")

_local = threading.local()


class TrackingError(RuntimeError):
    """Raised when tracking regions are nested on the same thread."""


@dataclass
class AllocCounter:
    current_bytes: int = 0
    peak_bytes: int = 0

    def alloc(self, nbytes: int) -> None:
        self.current_bytes += nbytes
        if self.current_bytes > self.peak_bytes:
            self.peak_bytes = self.current_bytes

    def free(self, nbytes: int) -> None:
        # buffers created before the region opened may die inside it
        self.current_bytes = max(0, self.current_bytes - nbytes)


def active_counter() -> AllocCounter | None:
    return getattr(_local, "counter", None)


def track_buffer(owner: Any, nbytes: int) -> None:
    """Charge ``nbytes`` to the active counter until ``owner`` is collected."""
    counter = active_counter()
    if counter is None or nbytes == 0:
        return
    counter.alloc(nbytes)
    weakref.finalize(owner, counter.free, nbytes)


def note_alloc(nbytes: int) -> None:
    counter = active_counter()
    if counter is not None:
        counter.alloc(nbytes)


def note_free(nbytes: int) -> None:
    counter = active_counter()
    if counter is not None:
        counter.free(nbytes)


def with_alloc_tracking(work: Callable[[], T]) -> tuple[T, int]:
    """Run ``work()`` and return ``(result, peak_bytes)``.

    The peak covers every tensor buffer allocated while ``work`` runs. Buffers
    still referenced by the result are part of the peak but are not freed here.
    Nesting on one thread raises :class:`TrackingError`.
    """
    if active_counter() is not None:
        raise TrackingError("alloc tracking regions cannot be nested")
    counter = AllocCounter()
    _local.counter = counter
    try:
        result = work()
    finally:
        _local.counter = None
    return result, counter.peak_bytes
