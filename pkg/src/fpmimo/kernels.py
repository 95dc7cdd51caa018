"""Complex linear-algebra kernels with per-operation rounding.

Every scalar multiply, add, subtract, divide, and square root inside these
kernels goes through the format emulation in :mod:`fpmimo.formats`.  Complex
reductions are computed on their 2n-term real expansion (two parallel real
reductions for the real and imaginary parts), summed strictly in index order.

All kernels accept leading batch dimensions and vectorize across them; the
scalar reduction order along the contraction axis is part of the contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .formats import FP64, FloatFormat, RangeMode, RoundingMode, _round

__all__ = [
    "PolicyMode",
    "PrecisionPolicy",
    "CholeskyBreakdownError",
    "round_input",
    "inner_product_fp",
    "matvec_fp",
    "matmul_fp",
    "blocked_inner_mixed",
    "blocked_matmul_mixed",
    "cholesky_fp",
    "trisolve_fp",
]


class PolicyMode(Enum):
    UNIFORM_LOW = "uniform-low"
    UNIFORM_HIGH = "uniform-high"
    MIXED = "mixed"


@dataclass(frozen=True)
class PrecisionPolicy:
    """Which format and rounding mode each stage of a computation uses."""

    low: FloatFormat
    high: FloatFormat = FP64
    mode: PolicyMode = PolicyMode.UNIFORM_LOW
    block_size: int = 32
    rounding: RoundingMode = RoundingMode.NEAREST_EVEN
    range_mode: RangeMode = RangeMode.UNBOUNDED

    def __post_init__(self) -> None:
        if self.mode is PolicyMode.MIXED and self.block_size < 1:
            raise ValueError("mixed mode requires block_size >= 1")

    @classmethod
    def uniform(cls, fmt: FloatFormat, **kw) -> "PrecisionPolicy":
        return cls(low=fmt, high=fmt, mode=PolicyMode.UNIFORM_LOW, **kw)

    @classmethod
    def mixed(cls, low: FloatFormat, high: FloatFormat, block_size: int, **kw) -> "PrecisionPolicy":
        return cls(low=low, high=high, mode=PolicyMode.MIXED, block_size=block_size, **kw)

    @property
    def working(self) -> FloatFormat:
        """Format of products and (for mixed mode) intra-block arithmetic."""
        if self.mode is PolicyMode.UNIFORM_HIGH:
            return self.high
        return self.low

    def _rnd_work(self, x, rng):
        return _round(x, self.working, self.rounding, self.range_mode, rng)

    def _rnd_high(self, x, rng):
        return _round(x, self.high, self.rounding, self.range_mode, rng)


class CholeskyBreakdownError(ArithmeticError):
    """A pivot became non-positive at the working precision."""

    def __init__(self, pivot_index: int):
        self.pivot_index = pivot_index
        super().__init__(
            f"matrix numerically not positive definite (pivot {pivot_index})"
        )


def round_input(x, policy: PrecisionPolicy, rng=None):
    """Round a real or complex array into the policy's working format.

    Kernels apply this on entry so that all inputs are representable;
    rounding twice is a no-op, so callers may pre-round to separate
    representation error from arithmetic error.
    """
    x = np.asarray(x)
    if np.iscomplexobj(x):
        re = policy._rnd_work(np.ascontiguousarray(x.real), rng)
        im = policy._rnd_work(np.ascontiguousarray(x.imag), rng)
        return re + 1j * im
    return policy._rnd_work(np.asarray(x, dtype=np.float64), rng)


def _expand_terms(a, d, policy: PrecisionPolicy, rng):
    """Rounded 2n-term real expansions of sum_i a_i d_i (no conjugation).

    Returns (e, f) with shape (..., 2n): e holds the real-part terms
    (Re a Re d, -Im a Im d) interleaved, f the imaginary-part terms
    (Re a Im d, Im a Re d).  Each product is individually rounded; the
    negation is exact.
    """
    ar, ai = a.real, a.imag
    dr, di = d.real, d.imag
    e0 = policy._rnd_work(ar * dr, rng)
    e1 = -policy._rnd_work(ai * di, rng)
    f0 = policy._rnd_work(ar * di, rng)
    f1 = policy._rnd_work(ai * dr, rng)
    e = np.stack([e0, e1], axis=-1).reshape(*e0.shape[:-1], -1)
    f = np.stack([f0, f1], axis=-1).reshape(*f0.shape[:-1], -1)
    return e, f


def _seq_sum(terms, fmt, policy: PrecisionPolicy, rng):
    """Recursive summation over the last axis, each partial sum rounded."""
    s = terms[..., 0]
    for j in range(1, terms.shape[-1]):
        s = _round(s + terms[..., j], fmt, policy.rounding, policy.range_mode, rng)
    return s


def _dot_uniform(a, d, policy: PrecisionPolicy, rng):
    e, f = _expand_terms(a, d, policy, rng)
    fmt = policy.working
    return _seq_sum(e, fmt, policy, rng) + 1j * _seq_sum(f, fmt, policy, rng)


def _blocked_sum(terms, policy: PrecisionPolicy, rng):
    """Intra-block sums in low precision, inter-block combine in high.

    The last block may be ragged; it is padded with exact zeros, which leaves
    every rounded partial sum unchanged.
    """
    b = policy.block_size
    n = terms.shape[-1]
    g = -(-n // b)
    pad = g * b - n
    if pad:
        terms = np.concatenate(
            [terms, np.zeros(terms.shape[:-1] + (pad,))], axis=-1
        )
    blocks = terms.reshape(*terms.shape[:-1], g, b)
    s = blocks[..., 0]
    for j in range(1, b):
        s = _round(s + blocks[..., j], policy.low, policy.rounding, policy.range_mode, rng)
    # s: (..., g) partial sums; combine sequentially in high precision
    return _seq_sum(s, policy.high, policy, rng)


def _dot_mixed(a, d, policy: PrecisionPolicy, rng):
    e, f = _expand_terms(a, d, policy, rng)
    return _blocked_sum(e, policy, rng) + 1j * _blocked_sum(f, policy, rng)


def _dot_any(a, d, policy: PrecisionPolicy, rng):
    if policy.mode is PolicyMode.MIXED:
        return _dot_mixed(a, d, policy, rng)
    return _dot_uniform(a, d, policy, rng)


def _as_cvec(x, name: str):
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim < 1:
        raise ValueError(f"{name} must have at least one dimension")
    return x


def inner_product_fp(a, b, policy: PrecisionPolicy, rng=None):
    """Finite-precision a^H b by sequential recursive summation.

    ``a`` and ``b`` are complex with shape (..., n).  Requires a uniform
    policy; use :func:`blocked_inner_mixed` for the mixed architecture.
    """
    if policy.mode is PolicyMode.MIXED:
        raise ValueError("inner_product_fp requires a uniform policy")
    a = _as_cvec(a, "a")
    b = _as_cvec(b, "b")
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    a = round_input(a, policy, rng)
    b = round_input(b, policy, rng)
    out = _dot_uniform(np.conj(a), b, policy, rng)
    if np.ndim(out) == 0:
        return complex(out)
    return out


def blocked_inner_mixed(a, d, policy: PrecisionPolicy, rng=None):
    """a^H d with blocked mixed-precision summation (block size b).

    Products and size-b intra-block partial sums run in the low format; the
    ceil(2n/b) partial results are combined sequentially in the high format.
    """
    if policy.mode is not PolicyMode.MIXED:
        raise ValueError("blocked_inner_mixed requires a mixed policy")
    a = _as_cvec(a, "a")
    d = _as_cvec(d, "d")
    if a.shape[-1] != d.shape[-1]:
        raise ValueError(f"length mismatch: {a.shape[-1]} vs {d.shape[-1]}")
    a = round_input(a, policy, rng)
    d = round_input(d, policy, rng)
    out = _dot_mixed(np.conj(a), d, policy, rng)
    if np.ndim(out) == 0:
        return complex(out)
    return out


# Above this many scalar product terms, matmul falls back to a column loop
# to bound peak memory.
_MATMUL_BULK_LIMIT = 1 << 24


def matvec_fp(A, x, policy: PrecisionPolicy, rng=None):
    """y = A x, each row reduced like an inner product (mixed-aware)."""
    A = np.asarray(A, dtype=np.complex128)
    x = _as_cvec(x, "x")
    if A.shape[-1] != x.shape[-1]:
        raise ValueError(f"dim mismatch: A is ...x{A.shape[-1]}, x has {x.shape[-1]}")
    A = round_input(A, policy, rng)
    x = round_input(x, policy, rng)
    return _dot_any(A, x[..., None, :], policy, rng)


def matmul_fp(A, B, policy: PrecisionPolicy, rng=None):
    """C = A B, entrywise finite-precision inner products (mixed-aware)."""
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    if A.shape[-1] != B.shape[-2]:
        raise ValueError(
            f"dim mismatch: A is ...x{A.shape[-1]}, B is {B.shape[-2]}x..."
        )
    A = round_input(A, policy, rng)
    B = round_input(B, policy, rng)
    m, n = A.shape[-2], A.shape[-1]
    p = B.shape[-1]
    Bt = np.swapaxes(B, -1, -2)  # (..., p, n)
    if m * p * 2 * n <= _MATMUL_BULK_LIMIT:
        return _dot_any(A[..., :, None, :], Bt[..., None, :, :], policy, rng)
    cols = [
        _dot_any(A, Bt[..., j, None, :], policy, rng) for j in range(p)
    ]
    return np.stack(cols, axis=-1)


def blocked_matmul_mixed(A, B, policy: PrecisionPolicy, rng=None):
    """Matrix-matrix product where each entry uses the blocked mixed kernel."""
    if policy.mode is not PolicyMode.MIXED:
        raise ValueError("blocked_matmul_mixed requires a mixed policy")
    return matmul_fp(A, B, policy, rng)


# -- rounded complex scalar helpers used by the factorization kernels -------

def _cmul(ar, ai, br, bi, rnd):
    re = rnd(rnd(ar * br) - rnd(ai * bi))
    im = rnd(rnd(ar * bi) + rnd(ai * br))
    return re, im


def cholesky_fp(C, policy: PrecisionPolicy, rng=None, error: str = "raise"):
    """Cholesky factorization C = R^H R with every operation rounded.

    ``C`` is Hermitian with shape (..., K, K); ``R`` comes back upper
    triangular with real positive diagonal.  Column-oriented order; the
    reduction over previously computed rows is sequential.

    ``error="raise"`` raises :class:`CholeskyBreakdownError` on a
    non-positive pivot; ``error="mask"`` returns ``(R, breakdown)`` where
    ``breakdown`` is a boolean array over the batch and broken lanes hold
    garbage.
    """
    if error not in ("raise", "mask"):
        raise ValueError("error must be 'raise' or 'mask'")
    C = np.asarray(C, dtype=np.complex128)
    K = C.shape[-1]
    if C.shape[-2] != K:
        raise ValueError("C must be square")
    C = round_input(C, policy, rng)
    fmt = policy.working
    rnd = lambda v: _round(v, fmt, policy.rounding, policy.range_mode, rng)  # noqa: E731

    batch = C.shape[:-2]
    Rr = np.zeros(batch + (K, K))
    Ri = np.zeros(batch + (K, K))
    breakdown = np.zeros(batch, dtype=bool)
    for j in range(K):
        acc = np.ascontiguousarray(C[..., j, j].real)
        for k in range(j):
            m2 = rnd(rnd(Rr[..., k, j] ** 2) + rnd(Ri[..., k, j] ** 2))
            acc = rnd(acc - m2)
        bad = acc <= 0
        if np.any(bad):
            if error == "raise":
                raise CholeskyBreakdownError(j)
            breakdown |= bad
            acc = np.where(bad, 1.0, acc)
        rjj = rnd(np.sqrt(acc))
        Rr[..., j, j] = rjj
        for i in range(j + 1, K):
            tr = np.ascontiguousarray(C[..., j, i].real)
            ti = np.ascontiguousarray(C[..., j, i].imag)
            for k in range(j):
                # conj(R[k, j]) * R[k, i]
                pr, pi = _cmul(
                    Rr[..., k, j], -Ri[..., k, j], Rr[..., k, i], Ri[..., k, i], rnd
                )
                tr = rnd(tr - pr)
                ti = rnd(ti - pi)
            Rr[..., j, i] = rnd(tr / rjj)
            Ri[..., j, i] = rnd(ti / rjj)
    R = Rr + 1j * Ri
    if error == "mask":
        return R, breakdown
    return R


def trisolve_fp(R, rhs, side: str, policy: PrecisionPolicy, rng=None):
    """Solve a triangular system from an upper factor R, every op rounded.

    side="lower-conjugate" solves R^H q = rhs (forward substitution);
    side="upper" solves R x = rhs (back substitution).  Assumes the real
    diagonal produced by :func:`cholesky_fp`.
    """
    if side not in ("lower-conjugate", "upper"):
        raise ValueError("side must be 'lower-conjugate' or 'upper'")
    R = np.asarray(R, dtype=np.complex128)
    rhs = _as_cvec(rhs, "rhs")
    K = R.shape[-1]
    if R.shape[-2] != K or rhs.shape[-1] != K:
        raise ValueError("shape mismatch between R and rhs")
    diag = np.diagonal(R, axis1=-2, axis2=-1).real
    if np.any(diag == 0):
        raise ZeroDivisionError("zero diagonal entry in triangular solve")
    R = round_input(R, policy, rng)
    rhs = round_input(rhs, policy, rng)
    fmt = policy.working
    rnd = lambda v: _round(v, fmt, policy.rounding, policy.range_mode, rng)  # noqa: E731

    batch = np.broadcast_shapes(R.shape[:-2], rhs.shape[:-1])
    xr = np.zeros(batch + (K,))
    xi = np.zeros(batch + (K,))
    order = range(K) if side == "lower-conjugate" else range(K - 1, -1, -1)
    for i in order:
        tr = np.zeros(batch) + rhs[..., i].real
        ti = np.zeros(batch) + rhs[..., i].imag
        ks = range(i) if side == "lower-conjugate" else range(i + 1, K)
        for k in ks:
            if side == "lower-conjugate":
                # (R^H)[i, k] = conj(R[k, i])
                cr, ci = R[..., k, i].real, -R[..., k, i].imag
            else:
                cr, ci = R[..., i, k].real, R[..., i, k].imag
            pr, pi = _cmul(cr, ci, xr[..., k], xi[..., k], rnd)
            tr = rnd(tr - pr)
            ti = rnd(ti - pi)
        d = R[..., i, i].real
        xr[..., i] = rnd(tr / d)
        xi[..., i] = rnd(ti / d)
    return xr + 1j * xi
