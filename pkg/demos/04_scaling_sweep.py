"""
Linear versus quadratic cost
============================

A short latency and memory sweep over sequence length. The plain SSM stack
grows linearly, full attention quadratically, and the hybrid stays close to
the SSM because only every k-th layer attends.
"""
from csplab.bench import BenchConfig, run_bench

cfg = BenchConfig(seq_lens=(64, 128, 256, 512), warmup_iters=1, measure_iters=3)
report = run_bench(cfg, seed=0)

print("variant          P'   latency_ms   peak_MB")
for e in report.entries:
    print("%-14s %5d %11.2f %9.1f" % (e.variant, e.P_prime, e.latency_ms, e.peak_bytes / 2**20))

for v, s in report.slopes.items():
    print("log-log slope %-14s %.2f" % (v, s))

print("hybrid over full attention (throughput, memory):")
for row in report.ratios["hybrid/full-attention"]:
    print("  P'=%4d  %.2f  %.2f" % (row["P_prime"], row["throughput_ratio"], row["memory_ratio"]))
