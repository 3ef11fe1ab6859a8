import time

import pytest

from csplab.bench import BenchConfig, run_bench_isolated


@pytest.fixture(scope="session")
def default_bench():
    """The full default sweep, shared by the bench examples and the acceptance suite."""
    t0 = time.perf_counter()
    report = run_bench_isolated(BenchConfig(), seed=0)
    report.elapsed_s = time.perf_counter() - t0
    return report
