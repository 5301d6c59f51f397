"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np


def make_diag_dominant_psd(rng: np.random.Generator, k: int, margin: float = 0.05) -> np.ndarray:
    """Symmetric PSD matrix whose diagonal strictly dominates its row (by >= margin)."""
    g = rng.normal(size=(k, k))
    s = g @ g.T / k
    off = s - np.diag(np.diag(s))
    boost = off.max(axis=1) - np.diag(s) + margin
    return s + np.diag(np.maximum(boost, 0.0) + margin)


def make_well_conditioned_psd(rng: np.random.Generator, k: int, floor: float = 0.15) -> np.ndarray:
    """Symmetric PSD matrix with smallest/largest singular value ratio >= floor."""
    q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    eigs = rng.uniform(floor, 1.0, size=k)
    eigs[0] = 1.0
    return (q * eigs) @ q.T


def grid_dist_to_segment(x: np.ndarray, p: np.ndarray, q: np.ndarray, steps: int = 200001) -> float:
    """Brute-force distance from x to the segment [p, q] on a parameter grid."""
    t = np.linspace(0.0, 1.0, steps)
    pts = np.outer(t, p) + np.outer(1.0 - t, q)
    return float(np.min(np.linalg.norm(pts - x[None, :], axis=1)))


def grid_min_row_margin(matrix: np.ndarray, steps: int = 200001) -> float:
    """Brute-force simplicial margin for a 3-row matrix (hulls are segments)."""
    a = np.asarray(matrix, dtype=np.float64)
    assert a.shape[0] == 3, "grid oracle only covers 3-row matrices"
    best = np.inf
    for i in range(3):
        others = np.delete(np.arange(3), i)
        best = min(best, grid_dist_to_segment(a[i], a[others[0]], a[others[1]], steps))
    return best
