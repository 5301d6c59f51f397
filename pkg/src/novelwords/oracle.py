"""Exact extreme-row identification, used as a slow reference detector.

At the population level the co-occurrence rows of a separable model are
images of the words' normalized topic loadings under an affine map; when
the prior's normalized second moment is simplicial, a word's row is an
extreme point of the row set exactly when the word is novel.  This module
finds those extreme rows directly with the exact hull-distance solver, with
none of the random projections or thresholds of the fast detector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import dist_to_hull, is_simplicial
from .errors import NotSimplicial, SolverFailure
from .model import NovelWordSets, PriorModel, TopicMatrix, population_cooc

DEFAULT_CLASS_TOL = 1e-9


@dataclass(frozen=True)
class ExtremeRowReport:
    """Row classes of a matrix with their hull margins.

    ``classes`` partitions row indices into groups of (numerically) equal
    rows; ``extreme[c]`` says whether class c's shared row lies strictly
    outside the hull of all rows in other classes, and ``margins[c]`` is its
    distance to that hull (infinite when there are no other classes).
    """

    classes: tuple[tuple[int, ...], ...]
    extreme: tuple[bool, ...]
    margins: tuple[float, ...]

    def extreme_classes(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c for c, e in zip(self.classes, self.extreme) if e)


def extreme_rows(matrix: np.ndarray, tol: float = DEFAULT_CLASS_TOL) -> ExtremeRowReport:
    """Group equal rows and test each group's row for extremality.

    Rows within euclidean distance ``tol`` of a class representative join
    that class; a class is extreme when its representative sits further
    than ``tol`` from the convex hull of the other classes' rows.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        raise ValueError("expected a nonempty 2-d array")
    reps: list[np.ndarray] = []
    members: list[list[int]] = []
    for i, row in enumerate(matrix):
        for c, rep in enumerate(reps):
            if np.linalg.norm(row - rep) <= tol:
                members[c].append(i)
                break
        else:
            reps.append(row)
            members.append([i])
    n_classes = len(reps)
    extreme = []
    margins = []
    for c in range(n_classes):
        others = [reps[o] for o in range(n_classes) if o != c]
        if not others:
            extreme.append(True)
            margins.append(np.inf)
            continue
        dist, _ = dist_to_hull(reps[c], np.array(others))
        extreme.append(dist > tol)
        margins.append(float(dist))
    return ExtremeRowReport(
        classes=tuple(tuple(m) for m in members),
        extreme=tuple(extreme),
        margins=tuple(margins),
    )


def oracle_novel_words(
    beta: TopicMatrix, prior: PriorModel, tol: float = DEFAULT_CLASS_TOL
) -> NovelWordSets:
    """Identify the novel-word groups from exact population quantities.

    Requires the prior's normalized second moment to be simplicial; raises
    NotSimplicial otherwise, since then distinct models share the same
    population co-occurrence and no method can tell them apart.
    """
    report = is_simplicial(prior.normalized_second_moment)
    if not report.is_simplicial:
        raise NotSimplicial(
            "prior's normalized second moment is not simplicial "
            f"(row {report.violating_row} lies in the hull of the others)"
        )
    cooc = population_cooc(beta, prior)
    rows = extreme_rows(cooc, tol=tol)
    groups = rows.extreme_classes()
    if len(groups) != beta.n_topics:
        raise SolverFailure(
            f"found {len(groups)} extreme row classes for {beta.n_topics} topics; "
            "geometry too close to degenerate for the configured tolerance"
        )
    return NovelWordSets(tuple(frozenset(g) for g in groups))
