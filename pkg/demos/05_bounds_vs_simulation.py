"""Checking every analytical piece against simulation.

1. Probabilistic inner-product error bound: empirical violation rate per
   lambda (should be tiny and shrink as lambda grows).
2. Zero-forcing detection error constant: fraction of trials whose realized
   error respects c_u * kappa(C) * ||r||.
3. The second-moment condition-number statistic Upsilon: quadrature vs
   Monte Carlo.
"""

from fpmimo import FP16, ExperimentConfig, PrecisionPolicy, verify_bounds
from fpmimo.bounds import upsilon
from fpmimo.harness import inner_product_violation_study

policy = PrecisionPolicy.uniform(FP16)

# -- 1: inner products -------------------------------------------------------
rep = inner_product_violation_study(500, policy, trials=5000, seed=0)
print("inner-product bound violation rates (n=500, fp16):")
for lam, rate in rep["violation_rates"].items():
    print(f"  lambda={lam}: {rate:.4f}")
print(f"  deterministic worst case: {rep['deterministic']:.4f}")

# -- 2: end-to-end detection -------------------------------------------------
cfg = ExperimentConfig("MU-SIMO", (128,), policy, K=4, trials=2000, seed=0)
for r in verify_bounds(cfg):
    print(f"\nZF detection error-bound violations (M={r['M']}, K=4, {r['trials']} trials):")
    for lam, rate in r["violation_rates"].items():
        print(f"  lambda={lam}: {rate:.4f}")

# -- 3: Upsilon --------------------------------------------------------------
print("\nUpsilon(M, K=2): quadrature vs Monte Carlo")
for M in (8, 32, 128):
    q = upsilon(M, 2, "quadrature")
    mc = upsilon(M, 2, "monte-carlo", samples=200_000, seed=M)
    print(f"  M={M:4d}: {q:.4f} vs {mc:.4f}")
