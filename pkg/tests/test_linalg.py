import math

import numpy as np
import pytest

from dilationlab.linalg import (
    SingularMatrixError,
    adjoint,
    as_operator,
    expm,
    op_norm,
    point_spectrum,
    psd_sqrt,
    random_contraction,
    random_matrix,
    random_unitary,
    solve,
)


def series_expm(A, t, terms=30):
    """Independent truncated power-series oracle for exp(t*A)."""
    A = np.asarray(A, dtype=complex)
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ (t * A) / k
        out = out + term
    return out


class TestExpm:
    def test_zero_generator_is_identity(self):
        assert op_norm(expm(np.zeros((3, 3)), t=7.0) - np.eye(3)) == 0.0

    def test_scalar_decay(self):
        out = expm(-np.eye(2), t=1.0)
        assert op_norm(out - math.exp(-1) * np.eye(2)) < 1e-14

    def test_rotation_against_series_oracle(self):
        J = np.array([[0.0, 1.0], [-1.0, 0.0]])
        got = expm(J, t=math.pi / 2)
        oracle = series_expm(J, math.pi / 2)
        assert op_norm(got - oracle) < 1e-13
        assert op_norm(got - np.array([[0.0, 1.0], [-1.0, 0.0]])) < 1e-13

    def test_overflow_is_explicit(self):
        with pytest.raises(OverflowError):
            expm(np.eye(2), t=1e6)

    @pytest.mark.parametrize("seed", range(5))
    def test_one_parameter_law(self, seed):
        rg = np.random.default_rng(seed)
        A = random_matrix(3, seed)
        A *= 5.0 / op_norm(A)
        s, t = rg.uniform(0, 2, size=2)
        assert op_norm(expm(A, s) @ expm(A, t) - expm(A, s + t)) < 1e-10

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            expm(np.zeros((2, 3)))

    def test_rejects_non_finite(self):
        bad = np.array([[np.inf, 0], [0, 1]])
        with pytest.raises(ValueError):
            as_operator(bad)


class TestPsdSqrt:
    def test_identity(self):
        assert op_norm(psd_sqrt(np.eye(3)) - np.eye(3)) < 1e-14

    def test_diagonal(self):
        assert op_norm(psd_sqrt(np.diag([4.0, 9.0])) - np.diag([2.0, 3.0])) < 1e-14

    @pytest.mark.parametrize("seed", range(5))
    def test_squaring_oracle(self, seed):
        G = random_matrix(4, seed)
        P = G @ adjoint(G)
        Q = psd_sqrt(P)
        assert op_norm(Q @ Q - P) <= 1e-10 * (1.0 + op_norm(P))
        assert op_norm(Q - adjoint(Q)) <= 1e-12

    def test_near_zero_dust_is_flattened(self):
        # the defect of a numerically unitary contraction must vanish exactly
        U = random_unitary(3, 5)
        D = psd_sqrt(np.eye(3) - adjoint(U) @ U)
        assert op_norm(D) == 0.0

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="not PSD"):
            psd_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="not PSD"):
            psd_sqrt(np.diag([1.0, -1e-3]))


class TestOpNormSolve:
    def test_zero(self):
        assert op_norm(np.zeros((2, 2))) == 0.0

    def test_diagonal(self):
        assert op_norm(np.diag([3.0, -1.0])) == 3.0

    @pytest.mark.parametrize("seed", range(5))
    def test_unitary_norm_one(self, seed):
        U = random_unitary(4, seed)
        assert op_norm(adjoint(U) @ U - np.eye(4)) < 1e-13  # Gram oracle
        assert abs(op_norm(U) - 1.0) < 1e-12

    def test_solve_identity(self):
        B = random_matrix(3, 0)
        assert op_norm(solve(np.eye(3), B) - B) == 0.0

    def test_solve_diagonal(self):
        X = solve(2.0 * np.eye(2), np.eye(2))
        assert op_norm(X - 0.5 * np.eye(2)) < 1e-15

    @pytest.mark.parametrize("seed", range(5))
    def test_solve_residual(self, seed):
        A = random_matrix(4, seed) + 4.0 * np.eye(4)
        B = random_matrix(4, seed + 50)
        X = solve(A, B)
        assert op_norm(A @ X - B) <= 1e-10 * op_norm(B) * np.linalg.cond(A)

    def test_singular_reports_condition(self):
        A = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(SingularMatrixError) as err:
            solve(A, np.eye(2))
        assert err.value.cond > 1e10


class TestPointSpectrum:
    def test_identity(self):
        spec = point_spectrum(np.eye(3), tol=1e-10)
        assert np.allclose(sorted(spec.eigenvalues.real), [1, 1, 1])
        assert spec.residuals.max() < 1e-12

    def test_imaginary_pair(self):
        spec = point_spectrum(np.diag([1j, -1j]), tol=1e-10)
        assert sorted(np.round(spec.eigenvalues.imag, 12)) == [-1.0, 1.0]

    def test_companion_golden_ratio(self):
        # companion matrix of z^2 - z - 1; roots (1 +- sqrt 5)/2
        C = np.array([[0.0, 1.0], [1.0, 1.0]])
        spec = point_spectrum(C, tol=1e-10)
        expected = sorted([(1 + math.sqrt(5)) / 2, (1 - math.sqrt(5)) / 2])
        assert np.allclose(sorted(spec.eigenvalues.real), expected, atol=1e-12)

    def test_unimodular_filter(self):
        spec = point_spectrum(np.diag([1.0, 0.5]), tol=1e-10)
        assert len(spec.unimodular()) == 1


class TestRandomOperators:
    def test_adjoint_involution_exact(self):
        A = random_matrix(4, 3)
        assert np.array_equal(adjoint(adjoint(A)), A)

    def test_contraction_norm(self):
        assert op_norm(random_contraction(3, 0)) <= 1.0

    def test_determinism(self):
        assert np.array_equal(random_contraction(3, 42), random_contraction(3, 42))

    def test_margin_sweep(self):
        for seed in range(100):
            assert op_norm(random_contraction(2, seed, margin=0.1)) <= 0.9

    def test_bad_margin(self):
        with pytest.raises(ValueError):
            random_contraction(2, 0, margin=1.0)
