"""Latency, throughput and peak-memory sweeps over sequence length.

All variants share width, depth and head count; the full-attention baseline
swaps each SSM block for attention + feed-forward one for one. Measurements
are single-threaded forward passes (``mode="inference"``) or forward +
backward passes (``mode="training"``) on random parameters and inputs.
"""
from __future__ import annotations

import csv
import ctypes
import gc
import json
import os
import statistics
import subprocess
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from csplab.model.backbone import backbone_forward
from csplab.model.config import VARIANTS, BackboneConfig
from csplab.model.params import init_backbone_params
from csplab.numcore import RngStream, Tensor, no_grad, with_alloc_tracking

DEFAULT_SEQ_LENS = (16, 32, 64, 128, 256, 512, 1024)
TAIL_FROM = 128  # asymptotic window: interpreter overhead flattens short sequences


@dataclass
class BenchConfig:
    variants: Sequence[str] = VARIANTS
    seq_lens: Sequence[int] = DEFAULT_SEQ_LENS
    F: int = 64
    L_M: int = 8
    k: int = 4
    H: int = 2
    S: int = 16
    warmup_iters: int = 3
    measure_iters: int = 9
    batch: int = 4
    mode: str = "inference"
    workers: int = 1

    def __post_init__(self):
        bad = [v for v in self.variants if v not in VARIANTS]
        if bad:
            raise ValueError(f"unknown variants {bad}; expected a subset of {VARIANTS}")
        if len(self.seq_lens) < 2:
            raise ValueError("need at least two sequence lengths to fit a scaling slope")
        if any(b <= a for a, b in zip(self.seq_lens, self.seq_lens[1:])):
            raise ValueError("sequence lengths must be strictly increasing")
        if self.mode not in ("inference", "training"):
            raise ValueError("mode must be 'inference' or 'training'")
        if self.workers != 1:
            raise ValueError("benchmarks are strictly single-threaded; workers must be 1")
        if self.measure_iters < 1 or self.warmup_iters < 0 or self.batch < 1:
            raise ValueError("iteration counts and batch must be positive")


@dataclass
class BenchEntry:
    variant: str
    P_prime: int
    latency_ms: float
    throughput: float  # samples per second
    peak_bytes: int
    error: str | None = None


@dataclass
class BenchReport:
    config: dict
    entries: list[BenchEntry]
    slopes: dict[str, float] = field(default_factory=dict)
    tail_slopes: dict[str, float] = field(default_factory=dict)  # P' >= TAIL_FROM only
    ratios: dict[str, list[dict]] = field(default_factory=dict)

    def get(self, variant: str, p_prime: int) -> BenchEntry:
        for e in self.entries:
            if e.variant == variant and e.P_prime == p_prime and e.error is None:
                return e
        raise KeyError((variant, p_prime))

    def series(self, variant: str, attr: str = "latency_ms") -> tuple[list[int], list[float]]:
        pts = [(e.P_prime, getattr(e, attr)) for e in self.entries if e.variant == variant and e.error is None]
        return [p for p, _ in pts], [v for _, v in pts]

    def slope(self, variant: str, min_p: int = 0) -> float:
        lens, lat = self.series(variant)
        pts = [(p, v) for p, v in zip(lens, lat) if p >= min_p]
        return fit_scaling_exponent([p for p, _ in pts], [v for _, v in pts])

    def to_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["variant", "P_prime", "latency_ms", "throughput", "peak_bytes"])
            for e in self.entries:
                if e.error is None:
                    w.writerow([e.variant, e.P_prime, f"{e.latency_ms:.6f}", f"{e.throughput:.6f}", e.peak_bytes])

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "entries": [asdict(e) for e in self.entries],
                           "slopes": self.slopes, "tail_slopes": self.tail_slopes,
                           "tail_from": TAIL_FROM, "ratios": self.ratios}, indent=2)


def fit_scaling_exponent(seq_lens: Sequence[float], latencies: Sequence[float]) -> float:
    """Least-squares slope of log(latency) against log(sequence length)."""
    x = np.asarray(seq_lens, dtype=np.float64)
    y = np.asarray(latencies, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two (length, latency) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("lengths and latencies must be positive")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def ratio_table(report: BenchReport, baseline_variant: str, target_variant: str) -> list[dict]:
    """Per shared P': how much better ``target`` is than ``baseline`` (>1 means better)."""
    names = {e.variant for e in report.entries}
    for v in (baseline_variant, target_variant):
        if v not in names:
            raise ValueError(f"variant {v!r} not in report")
    base_p = set(report.series(baseline_variant)[0])
    rows = []
    for p in report.series(target_variant)[0]:
        if p not in base_p:
            continue
        b, t = report.get(baseline_variant, p), report.get(target_variant, p)
        rows.append({
            "P_prime": p,
            "throughput_ratio": t.throughput / b.throughput,
            "latency_ratio": b.latency_ms / t.latency_ms,
            "memory_ratio": b.peak_bytes / t.peak_bytes,
        })
    return rows


def _backbone(variant: str, cfg: BenchConfig, p_prime: int, seed: int):
    bc = BackboneConfig(variant=variant, L_M=cfg.L_M, k=cfg.k, H=cfg.H, F=cfg.F, S=cfg.S,
                        P=p_prime, patch_size=1)
    return bc, init_backbone_params(bc, seed)


def _runner(variant: str, cfg: BenchConfig, p_prime: int, seed: int):
    """Return a zero-argument callable running one timed pass of ``variant``."""
    bc, params = _backbone(variant, cfg, p_prime, seed)
    x = RngStream(seed, "bench-input", p_prime).normal(size=(cfg.batch, cfg.F, p_prime))
    training = cfg.mode == "training"
    if not training:
        for p in params.values():
            p.requires_grad = False

    def once():
        if training:
            out = backbone_forward(Tensor(x), bc, params)
            out.sum().backward()
            return None
        with no_grad():
            backbone_forward(Tensor(x), bc, params)
        return None

    return once


def _failure(variant: str, p_prime: int, exc: BaseException) -> BenchEntry:
    return BenchEntry(variant, p_prime, float("nan"), float("nan"), 0, f"{type(exc).__name__}: {exc}")


def _time(once, cfg: BenchConfig) -> list[float]:
    for _ in range(cfg.warmup_iters):
        once()
    times = []
    gc_was_on = gc.isenabled()
    gc.disable()  # as timeit does: collector pauses are not part of the forward cost
    try:
        for _ in range(cfg.measure_iters):
            t0 = time.perf_counter_ns()
            once()
            times.append((time.perf_counter_ns() - t0) / 1e6)
    finally:
        if gc_was_on:
            gc.enable()
    return times


def _measure_point(cfg: BenchConfig, p_prime: int, seed: int) -> list[BenchEntry]:
    """Time all variants at one P', back to back.

    Keeping the variants of one P' adjacent in time means slow machine drift
    over the sweep shifts them together, so cross-variant ratios stay stable;
    each variant still runs its iterations consecutively on warm caches.
    """
    out = []
    for v in cfg.variants:
        try:
            once = _runner(v, cfg, p_prime, seed)
            latency = statistics.median(_time(once, cfg))
            _, peak = with_alloc_tracking(once)
        except MemoryError as exc:
            out.append(_failure(v, p_prime, exc))
            continue
        out.append(BenchEntry(v, p_prime, latency, cfg.batch / (latency / 1e3), peak))
    return out


def run_bench(cfg: BenchConfig, seed: int = 0) -> BenchReport:
    """Sweep every (variant, P') pair; failures are recorded and the sweep continues."""
    by_point = {}
    with threadpool_limits(limits=1):
        for p in cfg.seq_lens:
            by_point[p] = _measure_point(cfg, p, seed)
    entries = [e for v in range(len(cfg.variants)) for e in (by_point[p][v] for p in cfg.seq_lens)]
    report = BenchReport(_config_dict(cfg), entries)
    for v in cfg.variants:
        lens = report.series(v)[0]
        if len(lens) >= 2:
            report.slopes[v] = report.slope(v)
        if sum(p >= TAIL_FROM for p in lens) >= 2:
            report.tail_slopes[v] = report.slope(v, TAIL_FROM)
    for target in ("hybrid", "plain-ssm"):
        if target in cfg.variants and "full-attention" in cfg.variants:
            report.ratios[f"{target}/full-attention"] = ratio_table(report, "full-attention", target)
    if "hybrid" in cfg.variants and "plain-ssm" in cfg.variants:
        report.ratios["hybrid/plain-ssm"] = ratio_table(report, "plain-ssm", "hybrid")
    return report


def _pin_allocator() -> bool:
    """Fix glibc's malloc thresholds so freed temporaries are reused, not unmapped.

    With the defaults the mmap and trim thresholds move with the allocation
    history, and the same forward pass can run 1.5x slower depending on
    whether its temporaries come back as fresh (page-faulting) pages.
    Returns False where mallopt is unavailable.
    """
    if not sys.platform.startswith("linux"):
        return False
    try:
        libc = ctypes.CDLL("libc.so.6")
    except OSError:
        return False
    m_trim_threshold, m_mmap_threshold = -1, -3
    return bool(libc.mallopt(m_mmap_threshold, 32 << 20)) and bool(libc.mallopt(m_trim_threshold, 1 << 30))


def report_from_json(text: str) -> BenchReport:
    d = json.loads(text)
    entries = [BenchEntry(**e) for e in d["entries"]]
    return BenchReport(d["config"], entries, d["slopes"], d.get("tail_slopes", {}), d["ratios"])


def _config_dict(cfg: BenchConfig) -> dict:
    d = asdict(cfg)
    d["variants"], d["seq_lens"] = list(cfg.variants), list(cfg.seq_lens)
    return d


def run_bench_isolated(cfg: BenchConfig, seed: int = 0) -> BenchReport:
    """Run the sweep in a fresh interpreter with a pinned allocator.

    Timings then do not depend on what the calling process allocated before.
    The sweep itself stays single-threaded; the child process only provides
    a clean heap.
    """
    payload = json.dumps({"config": _config_dict(cfg), "seed": seed})
    proc = subprocess.run([sys.executable, "-m", "csplab.bench"], input=payload, capture_output=True,
                          text=True, check=False)
    if proc.returncode != 0:
        raise RuntimeError(f"isolated bench failed:\n{proc.stderr.strip()}")
    return report_from_json(proc.stdout)


if __name__ == "__main__":
    _pin_allocator()
    job = json.loads(sys.stdin.read())
    sys.stdout.write(run_bench(BenchConfig(**job["config"]), job["seed"]).to_json())
