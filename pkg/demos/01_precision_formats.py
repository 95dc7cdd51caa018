"""A first look at the emulated low-precision formats.

Rounds a handful of values into each format and shows the spacing of
representable numbers, the unit roundoff, and the difference between
round-to-nearest and stochastic rounding.
"""

import numpy as np

from fpmimo import BFLOAT16, FP16, FP32, FP64, RoundingMode, round_to_format

values = np.array([np.pi, 1 / 3, 1e-3, 1000.1])

print("format     t   u            pi ->")
for fmt in (BFLOAT16, FP16, FP32, FP64):
    rounded = round_to_format(values, fmt)
    print(f"{fmt.name:8s} {fmt.significand_bits:3d}  {fmt.unit_roundoff:.3e}  {rounded[0]:.10f}")

# Relative error of a single rounding never exceeds the unit roundoff.
x = np.random.default_rng(0).uniform(0.5, 2.0, 100_000)
for fmt in (BFLOAT16, FP16, FP32):
    err = np.abs(round_to_format(x, fmt) - x) / x
    print(f"{fmt.name}: max relative rounding error {err.max():.3e}  (u = {fmt.unit_roundoff:.3e})")

# Stochastic rounding is unbiased: averaging many rounded copies of the same
# value recovers it, while nearest rounding leaves a fixed offset.
rng = np.random.default_rng(42)
v = np.full(50_000, np.pi)
sto = round_to_format(v, FP16, mode=RoundingMode.STOCHASTIC, rng=rng)
near = round_to_format(v, FP16)
print(f"\npi = {np.pi:.8f}")
print(f"nearest rounding, mean of 50k copies:    {near.mean():.8f} (fixed bias)")
print(f"stochastic rounding, mean of 50k copies: {sto.mean():.8f} (bias averages out)")
