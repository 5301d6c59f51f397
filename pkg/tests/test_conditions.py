import numpy as np
import pytest
from conftest import (
    grid_dist_to_segment,
    grid_min_row_margin,
    make_diag_dominant_psd,
    make_well_conditioned_psd,
)

from novelwords.conditions import (
    dist_to_hull,
    is_diag_dominant,
    is_full_rank,
    is_simplicial,
    min_norm_point,
)
from novelwords.errors import SolverFailure

# Frozen counterexample fixtures, found by randomized search over small
# integer-generated matrices and validated against the grid oracle below.
# Rows of SIMPLICIAL_RANK_DEFICIENT satisfy row2 = -2 * row0 exactly, so the
# matrix has rank 2 while every row stays far from the hull of the others.
SIMPLICIAL_RANK_DEFICIENT = np.array(
    [
        [-2.0, 3.0, -1.0],
        [3.0, -9.0, 1.0],
        [4.0, -6.0, 2.0],
    ]
)
# Symmetric positive semidefinite (Gram matrix of integer vectors, halved)
# with a zero dominance margin in row 1, yet a comfortable simplicial margin.
SIMPLICIAL_NOT_DOMINANT = np.array(
    [
        [2.5, 1.5, 0.5],
        [1.5, 1.5, 0.0],
        [0.5, 0.0, 1.0],
    ]
)


class TestMinNormPoint:
    def test_origin_inside_hull(self):
        pts = np.array([[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]])
        x, w = min_norm_point(pts)
        assert np.linalg.norm(x) < 1e-7
        assert w.min() >= 0.0
        np.testing.assert_allclose(w.sum(), 1.0, atol=1e-12)

    def test_single_point(self):
        x, w = min_norm_point(np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(x, [3.0, 4.0])
        np.testing.assert_allclose(w, [1.0])

    def test_iteration_cap_raises(self):
        pts = np.array([[1.0, -1.0], [-1.0, 1.0]]) - np.array([0.3, 0.4])
        with pytest.raises(SolverFailure):
            min_norm_point(pts, max_iter=1)


class TestDistToHull:
    def test_point_in_set_gives_zero(self):
        pts = np.array([[1.0, 2.0], [3.0, 4.0]])
        dist, w = dist_to_hull(np.array([3.0, 4.0]), pts)
        assert dist < 1e-8
        np.testing.assert_allclose(w @ pts, [3.0, 4.0], atol=1e-8)

    def test_midpoint_of_segment(self):
        dist, w = dist_to_hull(np.zeros(2), np.array([[1.0, 0.0], [0.0, 1.0]]))
        np.testing.assert_allclose(dist, np.sqrt(0.5), atol=1e-10)
        np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            dist_to_hull(np.zeros(3), np.eye(2))

    def test_membership_on_random_hull_points(self):
        rng = np.random.default_rng(40)
        for _ in range(30):
            pts = rng.normal(size=(6, 4))
            lam = rng.dirichlet(np.ones(6))
            dist, _ = dist_to_hull(lam @ pts, pts)
            assert dist <= 1e-8

    def test_weights_certify_the_distance(self):
        rng = np.random.default_rng(41)
        for _ in range(30):
            pts = rng.normal(size=(5, 3))
            x = rng.normal(size=3)
            dist, w = dist_to_hull(x, pts)
            assert w.min() >= 0.0
            np.testing.assert_allclose(w.sum(), 1.0, atol=1e-10)
            np.testing.assert_allclose(np.linalg.norm(x - w @ pts), dist, atol=1e-9)

    def test_invariant_under_rotation(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            pts = rng.normal(size=(5, 4))
            x = rng.normal(size=4)
            base, _ = dist_to_hull(x, pts)
            q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
            rotated, _ = dist_to_hull(x @ q, pts @ q)
            assert abs(base - rotated) <= 1e-8

    def test_matches_grid_oracle_on_segments(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            pts = rng.normal(size=(2, 3)) * 2.0
            x = rng.normal(size=3) * 2.0
            dist, _ = dist_to_hull(x, pts)
            grid = grid_dist_to_segment(x, pts[0], pts[1])
            assert abs(dist - grid) <= 5e-5


class TestIsSimplicial:
    def test_identity_rows(self):
        report = is_simplicial(np.eye(3))
        assert report.is_simplicial
        np.testing.assert_allclose(report.gamma_hat, np.sqrt(1.5), atol=1e-9)
        assert report.violating_row is None
        assert report.certificate is None

    def test_midpoint_row_violates(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        report = is_simplicial(a)
        assert not report.is_simplicial
        assert report.gamma_hat <= 1e-9
        assert report.violating_row == 2
        np.testing.assert_allclose(report.certificate, [0.5, 0.5, 0.0], atol=1e-8)

    def test_single_row_trivially_simplicial(self):
        report = is_simplicial(np.array([[1.0, 2.0]]))
        assert report.is_simplicial and report.gamma_hat == np.inf

    def test_duplicate_rows_violate(self):
        a = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert not is_simplicial(a).is_simplicial


class TestDiagDominant:
    def test_strictly_dominant(self):
        assert is_diag_dominant(np.array([[0.5, 0.2], [0.3, 0.4]]))

    def test_tie_fails_strictness(self):
        assert not is_diag_dominant(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_requires_square(self):
        with pytest.raises(ValueError, match="square"):
            is_diag_dominant(np.ones((2, 3)))


class TestFullRank:
    def test_identity(self):
        assert is_full_rank(np.eye(4))

    def test_near_singular_fails(self):
        assert not is_full_rank(np.array([[1.0, 1.0], [1.0, 1.0 + 1e-12]]), tol=1e-6)

    def test_non_square_fails(self):
        assert not is_full_rank(np.ones((2, 3)))

    def test_zero_matrix_fails(self):
        assert not is_full_rank(np.zeros((3, 3)))


class TestSufficientConditions:
    """Strict diagonal dominance and full rank each imply the simplicial property."""

    def test_diag_dominance_implies_simplicial(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            k = int(rng.integers(2, 7))
            a = make_diag_dominant_psd(rng, k)
            assert is_diag_dominant(a)
            assert is_simplicial(a, tol=1e-9).is_simplicial

    def test_well_conditioned_full_rank_implies_simplicial(self):
        rng = np.random.default_rng(78)
        for _ in range(100):
            k = int(rng.integers(2, 7))
            a = make_well_conditioned_psd(rng, k)
            assert is_full_rank(a, tol=0.1)
            assert is_simplicial(a, tol=1e-9).is_simplicial


class TestFrozenCounterexamples:
    """Neither converse implication holds; these stored matrices witness that."""

    def test_rank_deficient_fixture(self):
        a = SIMPLICIAL_RANK_DEFICIENT
        np.testing.assert_array_equal(a[2], -2.0 * a[0])  # exact rank deficiency
        assert np.linalg.matrix_rank(a) == 2
        assert not is_full_rank(a, tol=1e-9)
        report = is_simplicial(a, tol=1e-9)
        assert report.is_simplicial
        assert abs(report.gamma_hat - grid_min_row_margin(a)) <= 5e-5
        assert report.gamma_hat > 0.25

    def test_not_dominant_fixture(self):
        a = SIMPLICIAL_NOT_DOMINANT
        np.testing.assert_array_equal(a, a.T)
        assert np.linalg.eigvalsh(a).min() >= -1e-12  # stays in the PSD class
        assert not is_diag_dominant(a)
        report = is_simplicial(a, tol=1e-9)
        assert report.is_simplicial
        assert abs(report.gamma_hat - grid_min_row_margin(a)) <= 5e-5
        assert report.gamma_hat > 0.25
