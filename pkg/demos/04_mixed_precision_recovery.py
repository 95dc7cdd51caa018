"""Blocked mixed-precision summation recovers almost all of the lost rate.

Multi-user uplink with zero-forcing detection at M=1024 antennas, K=4 users:
pure fp16 arithmetic loses a large fraction of the full-precision sum rate.
Computing products in fp16 but combining block partial sums in fp32 (block
size 32) recovers it at ~3% extra arithmetic cost.
"""

from fpmimo import FP16, FP32, FP64, ExperimentConfig, PrecisionPolicy, run_sweep
from fpmimo.bounds import cost_overhead

M, K, TRIALS = 1024, 4, 200


def rate(policy):
    cfg = ExperimentConfig("MU-SIMO", (M,), policy, K=K, trials=TRIALS, seed=3)
    return run_sweep(cfg).rows[0]["mean_rate"]


r16 = rate(PrecisionPolicy.uniform(FP16))
rmx = rate(PrecisionPolicy.mixed(FP16, FP32, block_size=32))
r64 = rate(PrecisionPolicy.uniform(FP64))

print(f"M={M}, K={K}, rho=10 dB, {TRIALS} channel draws")
print(f"  fp16 everywhere:          {r16:7.3f} bits/s/Hz")
print(f"  fp16 + fp32 block sums:   {rmx:7.3f} bits/s/Hz")
print(f"  fp64 everywhere:          {r64:7.3f} bits/s/Hz")
print(f"  gap recovered by mixing:  {(rmx - r16) / (r64 - r16):.1%}")

ovh = cost_overhead(M, 32, 2)
print(f"  extra cost of the high-precision stage: {100 * ovh:.2f}%")
