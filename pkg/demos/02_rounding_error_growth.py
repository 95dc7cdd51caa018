"""How inner-product rounding error grows with vector length.

Computes fp16-emulated inner products of random complex vectors at
increasing length n and compares the measured error against the
probabilistic bound sqrt(2) * gamma_{2n}(lambda) and the deterministic
worst case.  The probabilistic bound grows like sqrt(n); the worst case
grows like n and blows up once 2n*u approaches 1.
"""

import math

import numpy as np

from fpmimo import FP16, PrecisionPolicy, gamma_n, gamma_n_det, inner_product_fp

policy = PrecisionPolicy.uniform(FP16)
u = FP16.unit_roundoff
rng = np.random.default_rng(1)
trials = 2000

print(f"{'n':>6} {'median err':>12} {'p99 err':>12} {'sqrt2*gamma(l=1)':>17} {'worst case':>12}")
for n in (10, 100, 500, 1000):
    a = (rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))) / math.sqrt(2)
    b = (rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))) / math.sqrt(2)
    exact = np.einsum("ij,ij->i", a.conj(), b)
    approx = inner_product_fp(a, b, policy, rng=rng)
    rel = np.abs(approx - exact) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
    prob = math.sqrt(2) * gamma_n(2 * n, u, 1.0)
    det = math.sqrt(2) * gamma_n_det(2 * n, u) if 2 * n * u < 1 else math.inf
    print(f"{n:6d} {np.median(rel):12.3e} {np.percentile(rel, 99):12.3e} {prob:17.3e} {det:12.3e}")

print("\nMeasured errors sit well below the lambda=1 probabilistic bound;")
print("the deterministic bound is orders of magnitude looser and has no")
print("finite value once 2n*u >= 1 (here: n >= 2048 in fp16).")
