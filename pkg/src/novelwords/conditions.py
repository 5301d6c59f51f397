"""Geometric conditions on the normalized second-moment matrix.

The central primitive is an exact-arithmetic-free min-norm-point solver
(Wolfe's active-set method) computing the Euclidean distance from a point to
the convex hull of a finite point set, together with the convex weights that
achieve it.  On top of it sit the simplicial check (every row of a matrix is
far from the hull of the remaining rows) and the two easier sufficient
conditions: strict diagonal dominance and full numerical rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverFailure

DEFAULT_DISTANCE_TOL = 1e-9
DEFAULT_GAP_TOL = 1e-10


def _affine_min_norm(points: np.ndarray) -> np.ndarray:
    """Affine weights v (sum 1, sign-free) minimizing ||v @ points||."""
    m = points.shape[0]
    gram = points @ points.T
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = gram
    kkt[:m, m] = 1.0
    kkt[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:m]


def min_norm_point(
    points: np.ndarray, tol_gap: float = DEFAULT_GAP_TOL, max_iter: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Min-norm point of conv(points) by Wolfe's method.

    Args:
        points: n x d array, one point per row, n >= 1.
        tol_gap: stop once the duality gap <x, x> - min_j <x, p_j> falls below
            this value.
        max_iter: major-cycle cap; defaults to 10 * d * n.

    Returns:
        (x, w): the min-norm point and convex weights with w @ points = x.

    Raises:
        SolverFailure: the cap was reached with the gap still above tolerance.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n, d = pts.shape
    if n < 1:
        raise ValueError("points must be nonempty")
    if max_iter is None:
        max_iter = 10 * d * n
    # numerical floor: the gap of an exactly optimal corral still carries
    # rounding noise on the order of eps * scale^2
    scale2 = float(np.einsum("ij,ij->i", pts, pts).max(initial=0.0))
    tol_eff = max(tol_gap, 1e3 * np.finfo(np.float64).eps * max(1.0, scale2))

    start = int(np.argmin(np.einsum("ij,ij->i", pts, pts)))
    corral = [start]
    w = np.array([1.0])
    x = pts[start].copy()
    gap = np.inf
    for _ in range(max_iter):
        dots = pts @ x
        gap = float(x @ x - dots.min())
        if gap <= tol_eff:
            break
        q = int(np.argmin(dots))
        if q in corral:
            # the corral is already affinely optimal; fp noise keeps the gap
            # marginally positive and no progress is possible
            break
        corral.append(q)
        w = np.append(w, 0.0)
        while True:
            # minor cycle: every pass either accepts the affine optimum or
            # removes at least one corral point, so it terminates
            v = _affine_min_norm(pts[corral])
            if v.min() >= -1e-14:
                w = np.clip(v, 0.0, None)
                break
            neg = np.nonzero(v <= 0.0)[0]
            dead = neg[w[neg] <= 0.0]
            if dead.size:
                keep = np.ones(len(corral), dtype=bool)
                keep[dead] = False
                corral = [c for c, k in zip(corral, keep) if k]
                w = w[keep]
                continue
            ratios = w[neg] / (w[neg] - v[neg])
            pivot = int(neg[np.argmin(ratios)])
            theta = float(ratios.min())
            w = (1.0 - theta) * w + theta * v
            w[pivot] = 0.0
            keep = w > 0.0
            corral = [c for c, k in zip(corral, keep) if k]
            w = w[keep]
        w = w / w.sum()
        x = w @ pts[corral]
    else:
        raise SolverFailure(
            f"min-norm point did not converge in {max_iter} iterations "
            f"(duality gap {gap:.3e} > {tol_eff:.3e})"
        )
    dots = pts @ x
    gap = float(x @ x - dots.min())
    if gap > tol_eff:
        raise SolverFailure(f"min-norm point stalled at duality gap {gap:.3e}")
    weights = np.zeros(n)
    weights[corral] = w
    return x, weights


def dist_to_hull(
    x, points, tol_gap: float = DEFAULT_GAP_TOL, max_iter: int | None = None
) -> tuple[float, np.ndarray]:
    """Euclidean distance from x to conv(points), with certifying weights.

    Returns (distance, weights): weights are nonnegative, sum to 1, and
    weights @ points is the closest hull point.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != x.size:
        raise ValueError(f"dimension mismatch: point has {x.size}, hull points have {pts.shape[1]}")
    z, weights = min_norm_point(pts - x[None, :], tol_gap=tol_gap, max_iter=max_iter)
    return float(np.linalg.norm(z)), weights


@dataclass(frozen=True)
class SimplicialReport:
    """Outcome of the row-wise hull-distance check.

    ``gamma_hat`` is the smallest row-to-hull distance.  When the matrix is
    not simplicial, ``violating_row`` is the row achieving it and
    ``certificate`` holds convex weights over all rows (zero at the violating
    row) whose combination reproduces that row up to ``gamma_hat``.
    """

    is_simplicial: bool
    gamma_hat: float
    violating_row: int | None = None
    certificate: np.ndarray | None = None


def is_simplicial(
    matrix, tol: float = DEFAULT_DISTANCE_TOL, tol_gap: float = DEFAULT_GAP_TOL
) -> SimplicialReport:
    """Check that every row is at distance > tol from the hull of the others."""
    a = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    n = a.shape[0]
    if n == 1:
        return SimplicialReport(is_simplicial=True, gamma_hat=np.inf)
    gamma = np.inf
    worst_row = 0
    worst_weights = None
    for i in range(n):
        others = np.delete(np.arange(n), i)
        dist, weights = dist_to_hull(a[i], a[others], tol_gap=tol_gap)
        if dist < gamma:
            gamma = dist
            worst_row = i
            worst_weights = np.insert(weights, i, 0.0)
    if gamma > tol:
        return SimplicialReport(is_simplicial=True, gamma_hat=gamma)
    return SimplicialReport(
        is_simplicial=False,
        gamma_hat=gamma,
        violating_row=worst_row,
        certificate=worst_weights,
    )


def is_diag_dominant(matrix) -> bool:
    """Strict dominance of the diagonal over every off-diagonal entry of its row."""
    a = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if a.shape[0] != a.shape[1]:
        raise ValueError("diagonal dominance needs a square matrix")
    diff = np.diag(a)[:, None] - a
    np.fill_diagonal(diff, np.inf)
    return bool(diff.min() > 0.0)


def is_full_rank(matrix, tol: float = DEFAULT_DISTANCE_TOL) -> bool:
    """True when the smallest singular value exceeds tol times the largest."""
    a = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    sv = np.linalg.svd(a, compute_uv=False)
    if sv.size == 0 or a.shape[0] != a.shape[1]:
        return False
    return bool(sv[-1] > tol * sv[0])
