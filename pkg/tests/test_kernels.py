"""Kernel evaluations against hand-computed values and elementwise oracles."""

import numpy as np
import pytest

from spgp.exceptions import NumericalError
from spgp.kernels import (
    ArdParams,
    ProjParams,
    ard_kernel,
    build_cross_matrix,
    proj_kernel_data_pseudo,
    proj_kernel_pseudo_pseudo,
    stabilized_cholesky,
)


class TestArdKernel:
    def test_zero_distance_returns_amplitude(self):
        p = ArdParams(amp=1.5, inv_sq_lengthscales=np.array([0.3, 2.0]))
        x = np.array([0.7, -4.0])
        assert ard_kernel(x, x, p) == pytest.approx(1.5, abs=0)

    def test_all_zero_weights_ignore_inputs(self):
        p = ArdParams(amp=1.0, inv_sq_lengthscales=np.zeros(3))
        assert ard_kernel([1, 2, 3], [-9, 4, 100], p) == pytest.approx(1.0, abs=0)

    def test_scalar_value(self):
        # 2 * exp(-0.5 * 0.5 * (0 - 2)^2) = 2 * exp(-1)
        p = ArdParams(amp=2.0, inv_sq_lengthscales=np.array([0.5]))
        got = ard_kernel([0.0], [2.0], p)
        assert got == pytest.approx(2.0 * np.exp(-1.0), rel=1e-12)
        assert got == pytest.approx(0.735759, abs=1e-6)

    def test_dimension_mismatch_raises(self):
        p = ArdParams(amp=1.0, inv_sq_lengthscales=np.ones(2))
        with pytest.raises(ValueError):
            ard_kernel([1.0], [1.0, 2.0, 3.0], p)

    def test_value_in_unit_interval_times_amp(self):
        rng = np.random.default_rng(0)
        p = ArdParams(amp=0.8, inv_sq_lengthscales=rng.uniform(0, 3, size=4))
        for _ in range(50):
            x, x2 = rng.normal(size=4), rng.normal(size=4)
            v = ard_kernel(x, x2, p)
            assert 0 < v <= 0.8

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            ArdParams(amp=1.0, inv_sq_lengthscales=np.array([0.5, -0.1]))

    def test_nonpositive_amp_rejected(self):
        with pytest.raises(ValueError):
            ArdParams(amp=0.0, inv_sq_lengthscales=np.ones(1))


class TestProjKernel:
    def test_exact_projection_match_returns_amp(self):
        p = ProjParams(amp=0.7, proj=np.array([[1.0, 0.0]]))
        x = np.array([3.0, 42.0])
        assert proj_kernel_data_pseudo(x, np.array([3.0]), p) == pytest.approx(0.7, abs=0)

    def test_zero_projection_collapses_inputs(self):
        p = ProjParams(amp=0.9, proj=np.zeros((1, 3)))
        for x in ([1, 2, 3], [-5, 0, 9]):
            assert proj_kernel_data_pseudo(x, [0.0], p) == pytest.approx(0.9, abs=0)

    def test_ignores_unprojected_coordinate(self):
        # exp(-0.5 * (3 - 2)^2), second coordinate killed by the projection
        p = ProjParams(amp=1.0, proj=np.array([[1.0, 0.0]]))
        got = proj_kernel_data_pseudo([3.0, 99.0], [2.0], p)
        assert got == pytest.approx(np.exp(-0.5), rel=1e-12)
        assert got == pytest.approx(0.606531, abs=1e-6)

    def test_pseudo_pseudo_values(self):
        assert proj_kernel_pseudo_pseudo([0.0], [0.0], 1.0) == pytest.approx(1.0, abs=0)
        # exp(-0.5 * 4) = exp(-2)
        assert proj_kernel_pseudo_pseudo([0.0], [2.0], 1.0) == pytest.approx(
            np.exp(-2.0), rel=1e-12)
        assert proj_kernel_pseudo_pseudo([0.0], [2.0], 1.0) == pytest.approx(
            0.135335, abs=1e-6)

    def test_pseudo_pseudo_symmetric(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=2), rng.normal(size=2)
        assert proj_kernel_pseudo_pseudo(a, b, 1.3) == proj_kernel_pseudo_pseudo(b, a, 1.3)

    def test_square_projection_matches_general_quadratic_form(self):
        # with square P, the projected kernel equals
        # amp * exp(-0.5 (x - x')^T P^T P (x - x')) once the pseudo-input is
        # the projected second point
        rng = np.random.default_rng(7)
        P = rng.normal(size=(3, 3))
        p = ProjParams(amp=1.1, proj=P)
        for _ in range(20):
            x, x2 = rng.normal(size=3), rng.normal(size=3)
            d = x - x2
            direct = 1.1 * np.exp(-0.5 * d @ (P.T @ P) @ d)
            via_kernel = proj_kernel_data_pseudo(x, P @ x2, p)
            assert via_kernel == pytest.approx(direct, rel=1e-12)

    def test_ard_equals_projected_under_diagonal_embedding(self):
        rng = np.random.default_rng(11)
        for d in range(1, 6):
            b = rng.uniform(0.1, 2.0, size=d)
            ard = ArdParams(amp=0.6, inv_sq_lengthscales=b)
            proj = ProjParams(amp=0.6, proj=np.diag(np.sqrt(b)))
            for _ in range(10):
                x, x2 = rng.normal(size=d), rng.normal(size=d)
                lhs = ard_kernel(x, x2, ard)
                rhs = proj_kernel_data_pseudo(x, np.sqrt(b) * x2, proj)
                assert abs(lhs - rhs) <= 1e-12


class TestBuildCrossMatrix:
    def test_single_point_self_matrix(self):
        p = ArdParams(amp=2.5, inv_sq_lengthscales=np.ones(2))
        m = build_cross_matrix([[0.0, 1.0]], [[0.0, 1.0]], "ard", p)
        assert m.entries.shape == (1, 1)
        assert m.entries[0, 0] == 2.5
        assert m.jitter_applied == 0.0

    def test_entries_match_scalar_kernel(self):
        rng = np.random.default_rng(5)
        p = ArdParams(amp=1.2, inv_sq_lengthscales=rng.uniform(0.1, 1, size=2))
        rows = rng.normal(size=(3, 2))
        cols = rng.normal(size=(2, 2))
        m = build_cross_matrix(rows, cols, "ard", p).entries
        for i in range(3):
            for j in range(2):
                assert m[i, j] == pytest.approx(ard_kernel(rows[i], cols[j], p), rel=1e-14)

    def test_proj_entries_match_scalar_kernel(self):
        rng = np.random.default_rng(6)
        p = ProjParams(amp=0.9, proj=rng.normal(size=(2, 4)))
        rows = rng.normal(size=(5, 4))
        cols = rng.normal(size=(3, 2))
        m = build_cross_matrix(rows, cols, "proj-data-pseudo", p).entries
        for i in range(5):
            for j in range(3):
                assert m[i, j] == pytest.approx(
                    proj_kernel_data_pseudo(rows[i], cols[j], p), rel=1e-12)

    def test_self_matrix_exactly_symmetric(self):
        rng = np.random.default_rng(9)
        p = ArdParams(amp=1.0, inv_sq_lengthscales=rng.uniform(0.1, 2, size=3))
        pts = rng.normal(size=(20, 3))
        m = build_cross_matrix(pts, pts, "ard", p).entries
        assert np.array_equal(m, m.T)

    def test_self_matrix_positive_semidefinite(self):
        rng = np.random.default_rng(10)
        for n in (5, 20, 50):
            p = ArdParams(amp=1.0, inv_sq_lengthscales=rng.uniform(0.1, 2, size=2))
            pts = rng.normal(size=(n, 2))
            m = build_cross_matrix(pts, pts, "ard", p).entries
            eig = np.linalg.eigvalsh(m)
            assert eig.min() >= -1e-10 * p.amp

    def test_unknown_kind_rejected(self):
        p = ArdParams(amp=1.0, inv_sq_lengthscales=np.ones(1))
        with pytest.raises(ValueError):
            build_cross_matrix([[0.0]], [[0.0]], "matern", p)


class TestStabilizedCholesky:
    def test_identity_needs_no_jitter(self):
        L, jitter = stabilized_cholesky(np.eye(4))
        assert jitter == 0.0
        np.testing.assert_array_equal(L, np.eye(4))

    def test_hand_cholesky(self):
        # [[4,2],[2,3]] factors as [[2,0],[1,sqrt(2)]]
        L, jitter = stabilized_cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
        assert jitter == 0.0
        np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-15)

    def test_rank_deficient_succeeds_with_jitter(self):
        m = np.ones((3, 3))
        L, jitter = stabilized_cholesky(m)
        assert jitter > 0.0
        np.testing.assert_allclose(L @ L.T, m + jitter * np.eye(3), atol=1e-12)

    def test_hopeless_matrix_raises(self):
        with pytest.raises(NumericalError, match="widget"):
            stabilized_cholesky(np.array([[1.0, 0.0], [0.0, -5.0]]), label="widget")

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            stabilized_cholesky(np.ones((2, 3)))
