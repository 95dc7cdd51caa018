import math

import numpy as np
import pytest

from fpmimo.bounds import gamma_n, xi_bn
from fpmimo.formats import BFLOAT16, FP16, FP32, FP64, RoundingMode
from fpmimo.kernels import (
    CholeskyBreakdownError,
    PolicyMode,
    PrecisionPolicy,
    blocked_inner_mixed,
    blocked_matmul_mixed,
    cholesky_fp,
    inner_product_fp,
    matmul_fp,
    matvec_fp,
    trisolve_fp,
)

POL16 = PrecisionPolicy.uniform(FP16)
POL64 = PrecisionPolicy.uniform(FP64)
MIX = PrecisionPolicy.mixed(FP16, FP32, 32)


def _unit_vectors(rng, trials, n):
    v = rng.standard_normal((trials, n)) + 1j * rng.standard_normal((trials, n))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _seq_ref(a, b):
    """Plain 64-bit reference with the contractual summation order."""
    ar, ai = np.conj(a).real, np.conj(a).imag
    br, bi = b.real, b.imag
    re = im = 0.0
    for k in range(a.shape[-1]):
        re = re + ar[k] * br[k]
        re = re - ai[k] * bi[k]
        im = im + ar[k] * bi[k]
        im = im + ai[k] * br[k]
    return re + 1j * im


class TestPolicy:
    def test_uniform_working(self):
        assert POL16.working is FP16
        high = PrecisionPolicy(low=FP16, high=FP32, mode=PolicyMode.UNIFORM_HIGH)
        assert high.working is FP32

    def test_mixed_requires_block(self):
        with pytest.raises(ValueError):
            PrecisionPolicy(low=FP16, high=FP32, mode=PolicyMode.MIXED, block_size=0)


class TestInnerProduct:
    def test_basis_vector_exact(self):
        rng = np.random.default_rng(0)
        b = _unit_vectors(rng, 1, 8)[0]
        bq = np.round(b * 64) / 64  # exactly representable in fp16
        e1 = np.zeros(8, dtype=complex)
        e1[0] = 1.0
        assert inner_product_fp(e1, bq, POL16) == bq[0]

    def test_fp64_matches_sequential_reference(self):
        rng = np.random.default_rng(1)
        a = _unit_vectors(rng, 1, 50)[0]
        b = _unit_vectors(rng, 1, 50)[0]
        assert inner_product_fp(a, b, POL64) == _seq_ref(a, b)

    def test_reproducible(self):
        rng = np.random.default_rng(2)
        a = _unit_vectors(rng, 1, 100)[0]
        b = _unit_vectors(rng, 1, 100)[0]
        assert inner_product_fp(a, b, POL16) == inner_product_fp(a, b, POL16)
        srng1 = np.random.default_rng(7)
        srng2 = np.random.default_rng(7)
        st = PrecisionPolicy(low=FP16, high=FP16, rounding=RoundingMode.STOCHASTIC)
        assert inner_product_fp(a, b, st, srng1) == inner_product_fp(a, b, st, srng2)

    def test_error_bound_holds(self):
        rng = np.random.default_rng(3)
        n, trials = 1000, 2000
        a = _unit_vectors(rng, trials, n)
        b = _unit_vectors(rng, trials, n)
        got = inner_product_fp(a, b, POL16)
        ref = inner_product_fp(a, b, POL64)
        # norms of the rounded inputs
        from fpmimo.kernels import round_input

        na = np.linalg.norm(round_input(a, POL16), axis=-1)
        nb = np.linalg.norm(round_input(b, POL16), axis=-1)
        bound = math.sqrt(2) * gamma_n(2 * n, FP16.unit_roundoff, 1.0) * na * nb
        frac = np.mean(np.abs(got - ref) <= bound)
        assert frac >= 0.99

    def test_deterministic_bound_never_violated(self):
        rng = np.random.default_rng(4)
        n, trials = 200, 500
        a = _unit_vectors(rng, trials, n)
        b = _unit_vectors(rng, trials, n)
        got = inner_product_fp(a, b, POL16)
        ref = inner_product_fp(a, b, POL64)
        u = FP16.unit_roundoff
        det = 2 * n * u / (1 - 2 * n * u)
        assert np.all(np.abs(got - ref) <= math.sqrt(2) * det * 1.0001)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            inner_product_fp(np.ones(3), np.ones(4), POL16)

    def test_rejects_mixed_policy(self):
        with pytest.raises(ValueError, match="uniform"):
            inner_product_fp(np.ones(4), np.ones(4), MIX)


class TestMatvecMatmul:
    def test_identity(self):
        rng = np.random.default_rng(5)
        x = np.round(_unit_vectors(rng, 1, 6)[0] * 64) / 64
        assert np.array_equal(matvec_fp(np.eye(6), x, POL16), x)

    def test_row_matches_inner_product(self):
        rng = np.random.default_rng(6)
        a = _unit_vectors(rng, 1, 40)[0]
        x = _unit_vectors(rng, 1, 40)[0]
        y = matvec_fp(np.conj(a)[None, :], x, POL16)
        assert y[0] == inner_product_fp(a, x, POL16)

    def test_matmul_identity(self):
        rng = np.random.default_rng(7)
        A = _unit_vectors(rng, 4, 5)
        from fpmimo.kernels import round_input

        Aq = round_input(A, POL16)
        assert np.array_equal(matmul_fp(Aq, np.eye(5), POL16), Aq)

    def test_matmul_1xn_nx1(self):
        rng = np.random.default_rng(8)
        a = _unit_vectors(rng, 1, 30)[0]
        b = _unit_vectors(rng, 1, 30)[0]
        C = matmul_fp(np.conj(a)[None, :], b[:, None], POL16)
        assert C[0, 0] == inner_product_fp(a, b, POL16)

    def test_matvec_error_bound(self):
        rng = np.random.default_rng(9)
        m, n = 256, 4
        A = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / math.sqrt(2)
        x = _unit_vectors(rng, 1, n)[0]
        got = matvec_fp(A, x, POL16)
        ref = matvec_fp(A, x, POL64)
        from fpmimo.kernels import round_input

        Aq = round_input(A, POL16)
        xq = round_input(x, POL16)
        bound = (
            math.sqrt(2 * min(m, n))
            * gamma_n(2 * n, FP16.unit_roundoff, 3.0)
            * np.linalg.norm(Aq, 2)
            * np.linalg.norm(xq)
        )
        assert np.linalg.norm(got - ref) <= bound

    def test_dim_mismatch(self):
        with pytest.raises(ValueError, match="dim mismatch"):
            matvec_fp(np.ones((3, 4)), np.ones(5), POL16)
        with pytest.raises(ValueError, match="dim mismatch"):
            matmul_fp(np.ones((3, 4)), np.ones((5, 2)), POL16)


class TestBlockedMixed:
    def test_single_block_equals_uniform_low(self):
        rng = np.random.default_rng(10)
        n = 20
        a = _unit_vectors(rng, 1, n)[0]
        b = _unit_vectors(rng, 1, n)[0]
        wide = PrecisionPolicy.mixed(FP16, FP32, 2 * n)
        assert blocked_inner_mixed(a, b, wide) == inner_product_fp(a, b, POL16)

    def test_b1_all_high_precision(self):
        rng = np.random.default_rng(11)
        n = 20
        a = _unit_vectors(rng, 1, n)[0]
        b = _unit_vectors(rng, 1, n)[0]
        b1 = PrecisionPolicy.mixed(FP16, FP64, 1)
        # products rounded to fp16, all additions exact (fp64 high)
        got = blocked_inner_mixed(a, b, b1)
        from fpmimo.kernels import round_input

        aq = round_input(a, POL16)
        bq = round_input(b, POL16)
        from fpmimo.formats import round_to_format

        ar, ai = np.conj(aq).real, np.conj(aq).imag
        br, bi = bq.real, bq.imag
        r = lambda v: round_to_format(v, FP16)  # noqa: E731
        re = np.sum(
            np.stack([r(ar * br), -np.asarray(r(ai * bi))], -1).reshape(-1)
        )
        im = np.sum(np.stack([r(ar * bi), r(ai * br)], -1).reshape(-1))
        assert got == pytest.approx(re + 1j * im, rel=1e-15)

    def test_error_bound(self):
        rng = np.random.default_rng(12)
        n, trials = 1000, 500
        a = _unit_vectors(rng, trials, n)
        b = _unit_vectors(rng, trials, n)
        got = blocked_inner_mixed(a, b, MIX)
        ref = inner_product_fp(a, b, POL64)
        bound = math.sqrt(2) * xi_bn(32, n, FP16.unit_roundoff, FP32.unit_roundoff, 1.0)
        frac = np.mean(np.abs(got - ref) <= bound)
        assert frac >= 0.99

    def test_ragged_last_block(self):
        rng = np.random.default_rng(13)
        n = 37  # 2n = 74 = 2*32 + 10
        a = _unit_vectors(rng, 1, n)[0]
        b = _unit_vectors(rng, 1, n)[0]
        got = blocked_inner_mixed(a, b, MIX)
        ref = inner_product_fp(a, b, POL64)
        assert abs(got - ref) <= math.sqrt(2) * xi_bn(
            32, n, FP16.unit_roundoff, FP32.unit_roundoff, 3.0
        )

    def test_matmul_entrywise(self):
        rng = np.random.default_rng(14)
        H = (rng.standard_normal((64, 4)) + 1j * rng.standard_normal((64, 4))) / math.sqrt(2)
        C = blocked_matmul_mixed(H.conj().T, H, MIX)
        a = H[:, 0]
        assert C[0, 0] == blocked_inner_mixed(a, a, MIX)

    def test_requires_mixed(self):
        with pytest.raises(ValueError, match="mixed"):
            blocked_inner_mixed(np.ones(4), np.ones(4), POL16)
        with pytest.raises(ValueError, match="mixed"):
            blocked_matmul_mixed(np.ones((2, 2)), np.ones((2, 2)), POL16)


class TestCholesky:
    def test_identity(self):
        R = cholesky_fp(np.eye(4), POL16)
        assert np.array_equal(R, np.eye(4))

    def test_diagonal(self):
        R = cholesky_fp(np.diag([4.0, 9.0]), POL16)
        assert np.array_equal(R, np.diag([2.0, 3.0]))

    def test_fp64_residual(self):
        rng = np.random.default_rng(15)
        H = (rng.standard_normal((64, 4)) + 1j * rng.standard_normal((64, 4))) / math.sqrt(2)
        C = H.conj().T @ H
        C = 0.5 * (C + C.conj().T)
        R = cholesky_fp(C, POL64)
        assert np.allclose(R.conj().T @ R, C, atol=1e-12)
        assert np.all(np.triu(R) == R)  # upper triangular
        assert np.all(np.diag(R).real > 0)
        assert np.all(np.diag(R).imag == 0)

    def test_fp16_backward_error(self):
        rng = np.random.default_rng(16)
        trials = 200
        H = (rng.standard_normal((trials, 64, 4)) + 1j * rng.standard_normal((trials, 64, 4))) / math.sqrt(2)
        C = np.einsum("smk,sml->skl", H.conj(), H)
        from fpmimo.kernels import round_input

        Cq = round_input(C, POL16)
        Cq = 0.5 * (Cq + np.conj(np.swapaxes(Cq, -1, -2)))
        Cq = round_input(Cq, POL16)
        R = cholesky_fp(Cq, POL16)
        resid = np.einsum("skj,skl->sjl", R.conj(), R) - Cq
        rel = np.linalg.norm(resid, axis=(-2, -1)) / np.linalg.norm(Cq, axis=(-2, -1))
        K, u = 4, FP16.unit_roundoff
        factor = 2 * K * gamma_n(2 * K + 1, u, 3.0)
        bound = factor / (1 - factor)
        assert np.mean(rel <= bound) >= 0.99

    def test_breakdown_raises_with_pivot(self):
        C = np.array([[1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(CholeskyBreakdownError) as e:
            cholesky_fp(C, POL16)
        assert e.value.pivot_index == 1

    def test_breakdown_mask(self):
        good = np.eye(2)
        bad = np.array([[1.0, 0.0], [0.0, -1.0]])
        C = np.stack([good, bad]).astype(complex)
        R, mask = cholesky_fp(C, POL16, error="mask")
        assert list(mask) == [False, True]
        assert np.array_equal(R[0], np.eye(2))

    def test_not_square(self):
        with pytest.raises(ValueError, match="square"):
            cholesky_fp(np.ones((2, 3)), POL16)


class TestTrisolve:
    def test_identity(self):
        rhs = np.array([1.0 + 1j, 2.0 - 1j])
        assert np.array_equal(trisolve_fp(np.eye(2), rhs, "upper", POL16), rhs)
        assert np.array_equal(trisolve_fp(np.eye(2), rhs, "lower-conjugate", POL16), rhs)

    def test_scalar_divide(self):
        assert trisolve_fp(np.array([[2.0]]), np.array([6.0 + 0j]), "upper", POL16)[0] == 3.0

    def test_round_trip_fp64(self):
        rng = np.random.default_rng(17)
        H = (rng.standard_normal((32, 4)) + 1j * rng.standard_normal((32, 4))) / math.sqrt(2)
        C = H.conj().T @ H
        R = cholesky_fp(C, POL64)
        rhs = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        q = trisolve_fp(R, rhs, "lower-conjugate", POL64)
        x = trisolve_fp(R, q, "upper", POL64)
        assert np.allclose(C @ x, rhs, atol=1e-10)

    def test_zero_diagonal(self):
        with pytest.raises(ZeroDivisionError):
            trisolve_fp(np.diag([1.0, 0.0]), np.ones(2, dtype=complex), "upper", POL16)

    def test_bad_side(self):
        with pytest.raises(ValueError, match="side"):
            trisolve_fp(np.eye(2), np.ones(2), "left", POL16)


class TestPrecisionOrdering:
    def test_error_shrinks_with_precision(self):
        rng = np.random.default_rng(18)
        n, trials = 500, 200
        a = _unit_vectors(rng, trials, n)
        b = _unit_vectors(rng, trials, n)
        ref = inner_product_fp(a, b, POL64)
        medians = []
        for fmt in (BFLOAT16, FP16, FP32):
            got = inner_product_fp(a, b, PrecisionPolicy.uniform(fmt))
            medians.append(np.median(np.abs(got - ref)))
        assert medians[0] > medians[1] > medians[2] > 0
