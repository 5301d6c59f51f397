"""Novel-word detection by random projections of the co-occurrence matrix.

Novel words are the extreme points of the set of co-occurrence rows.  An
extreme row wins a positive fraction of random linear projections against
the rows far from it, while a mixed word's row, being a convex combination
of novel rows, can never strictly beat all of them.  The detector therefore:

1. builds, for every word i, the set of words whose Gram distance
   ``C[i, i] - 2 C[i, j] + C[j, j]`` from i is at least d/2 (its
   *neighborhood* of plausibly-different words),
2. counts how often word i beats its whole neighborhood across p random
   Gaussian projections of C (``phat``),
3. scans words by decreasing win frequency and keeps one representative
   per group, rejecting any candidate closer than d/2 to one already kept.

The gap d can be supplied (e.g. from known model geometry) or estimated
from the positive pairwise Gram distances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cooc import CoocMatrix
from .errors import DegenerateGeometry, IncompleteRecovery
from .model import Corpus
from .rng import stream

DEFAULT_PROJECTIONS = 500
_D_QUANTILE = 0.1


@dataclass(frozen=True)
class DetectorConfig:
    """Detection parameters.

    ``gram_gap`` is the separation scale d; leave it None to estimate it
    from the data.  ``seed`` drives the projection directions only.
    """

    n_topics: int
    n_projections: int = DEFAULT_PROJECTIONS
    gram_gap: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError("n_topics must be positive")
        if self.n_projections < 1:
            raise ValueError("n_projections must be positive")
        if self.gram_gap is not None and not self.gram_gap > 0:
            raise ValueError("gram_gap must be positive when given")


@dataclass(frozen=True)
class DetectionResult:
    """Outcome of a detection run.

    ``selected`` lists one word per recovered group, in selection order.
    ``phat`` holds each word's projection win frequency (zero for words
    excluded as absent).  ``diagnostics`` records the gap actually used,
    whether it was estimated, the scan depth, and wall time.
    """

    selected: list[int]
    phat: np.ndarray
    nbd_sizes: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def gram_distances(matrix: np.ndarray) -> np.ndarray:
    """Pairwise distances C[i,i] - 2 C[i,j] + C[j,j] as a full matrix."""
    diag = np.diagonal(matrix)
    return diag[:, None] - 2.0 * matrix + diag[None, :]


def estimate_gap(
    matrix: np.ndarray, active: np.ndarray | None = None, quantile: float = _D_QUANTILE
) -> float:
    """Estimate the separation scale d from positive pairwise distances.

    Returns twice the ``quantile``-th order statistic of the strictly
    positive upper triangle; raises DegenerateGeometry when every pairwise
    distance is nonpositive (e.g. a rank-one or all-equal matrix).

    The order statistic (rather than an interpolated quantile) matters when
    every word is a vertex: interpolation would land strictly above the
    smallest genuine gap and cut the closest pair out of each other's
    neighborhoods, while the order statistic never exceeds an observed gap.

    All ordered pairs contribute: an empirical co-occurrence matrix is not
    symmetric (its two corpus halves differ), so s(i, j) and s(j, i) are
    distinct statistics and both feed the quantile.
    """
    gaps = gram_distances(matrix)
    if active is not None:
        gaps = gaps[np.ix_(active, active)]
    off_diag = gaps[~np.eye(gaps.shape[0], dtype=bool)]
    positive = off_diag[off_diag > 0.0]
    if positive.size == 0:
        raise DegenerateGeometry(
            "no positive pairwise Gram distances; cannot estimate a gap"
        )
    return 2.0 * float(np.quantile(positive, quantile, method="lower"))


def neighborhoods(
    matrix: np.ndarray, gram_gap: float, active: np.ndarray | None = None
) -> np.ndarray:
    """Boolean matrix whose row i flags words at Gram distance >= d/2 from i.

    Inactive words are excluded both as rows and as members.
    """
    gaps = gram_distances(matrix)
    nbd = gaps >= gram_gap / 2.0
    np.fill_diagonal(nbd, False)
    if active is not None:
        nbd[~active, :] = False
        nbd[:, ~active] = False
    return nbd


def projection_directions(n_words: int, n_projections: int, seed: int) -> np.ndarray:
    """The shared Gaussian direction matrix (one column per projection).

    Direction r comes from the substream (seed, r) alone, so any process
    holding the seed reproduces any subset of directions independently.
    """
    directions = np.empty((n_words, n_projections))
    for r in range(n_projections):
        directions[:, r] = stream(seed, "proj", r).standard_normal(n_words)
    return directions


def count_wins(
    values: np.ndarray, nbd: np.ndarray, active: np.ndarray | None = None
) -> np.ndarray:
    """Fraction of projections each word wins against its neighborhood.

    ``values[i, r]`` is word i's score under projection r.  A word with an
    empty neighborhood wins every projection; ties count as wins; inactive
    words score 0.
    """
    w, n_projections = values.shape
    if active is None:
        active = np.ones(w, dtype=bool)
    wins = np.zeros(w, dtype=np.int64)
    for i in np.nonzero(active)[0]:
        members = nbd[i]
        if not members.any():
            wins[i] = n_projections
            continue
        rivals = values[members].max(axis=0)
        wins[i] = int(np.count_nonzero(values[i] >= rivals))
    return wins / float(n_projections)


def project_and_count(
    matrix: np.ndarray,
    nbd: np.ndarray,
    n_projections: int,
    seed: int,
    active: np.ndarray | None = None,
) -> np.ndarray:
    """Project the matrix onto random directions and score neighborhood wins."""
    directions = projection_directions(matrix.shape[0], n_projections, seed)
    return count_wins(matrix @ directions, nbd, active=active)


def select_novel(
    nbd: np.ndarray,
    phat: np.ndarray,
    n_topics: int,
    active: np.ndarray | None = None,
) -> tuple[list[int], int]:
    """Greedy selection of one representative per group.

    Words are scanned in order of decreasing win frequency (ties broken
    toward the lower index); a candidate is kept only if every word already
    kept lies in its neighborhood, i.e. the candidate is far from all of
    them.  Returns (selected, scan_depth); raises IncompleteRecovery with
    the partial selection when fewer than ``n_topics`` words survive.
    """
    w = phat.shape[0]
    if active is None:
        active = np.ones(w, dtype=bool)
    order = np.lexsort((np.arange(w), -phat))
    selected: list[int] = []
    scanned = 0
    for idx in order:
        if not active[idx]:
            continue
        scanned += 1
        if all(nbd[kept, idx] for kept in selected):
            selected.append(int(idx))
            if len(selected) == n_topics:
                return selected, scanned
    raise IncompleteRecovery(
        f"found {len(selected)} of {n_topics} well-separated words",
        selected=selected,
    )


def detect_from_cooc(cooc: CoocMatrix, config: DetectorConfig) -> DetectionResult:
    """Run the full detector on a co-occurrence estimate.

    Diagnostics carry per-stage wall times in milliseconds under
    ``timing_ms`` (keys ``project`` and ``select``; callers that also build
    the input add ``split`` and ``cooc``).
    """
    start = time.perf_counter()
    active = ~cooc.zero_rows
    if int(active.sum()) < config.n_topics:
        raise IncompleteRecovery(
            f"only {int(active.sum())} words present, need {config.n_topics}",
            selected=[],
        )
    if config.gram_gap is None:
        gap = estimate_gap(cooc.matrix, active=active)
        estimated = True
    else:
        gap = config.gram_gap
        estimated = False
    nbd = neighborhoods(cooc.matrix, gap, active=active)
    phat = project_and_count(
        cooc.matrix, nbd, config.n_projections, config.seed, active=active
    )
    projected = time.perf_counter()
    selected, scanned = select_novel(nbd, phat, config.n_topics, active=active)
    done = time.perf_counter()
    return DetectionResult(
        selected=selected,
        phat=phat,
        nbd_sizes=nbd.sum(axis=1),
        diagnostics={
            "gram_gap": gap,
            "gap_estimated": estimated,
            "scan_depth": scanned,
            "timing_ms": {
                "project": (projected - start) * 1e3,
                "select": (done - projected) * 1e3,
            },
        },
    )


def detect_novel_words(
    corpus: Corpus,
    n_topics: int,
    n_projections: int = DEFAULT_PROJECTIONS,
    gram_gap: float | None = None,
    seed: int = 0,
) -> DetectionResult:
    """Split a corpus, estimate co-occurrence, and detect novel words.

    The same seed drives both the document split and the projection
    directions; the two uses draw from unrelated substreams.
    """
    from .cooc import cooc_core, cooc_from_core, split_corpus

    start = time.perf_counter()
    split = split_corpus(corpus, seed)
    split_done = time.perf_counter()
    cooc = cooc_from_core(*cooc_core(split), corpus.n_docs)
    cooc_done = time.perf_counter()
    config = DetectorConfig(
        n_topics=n_topics,
        n_projections=n_projections,
        gram_gap=gram_gap,
        seed=seed,
    )
    result = detect_from_cooc(cooc, config)
    result.diagnostics["timing_ms"]["split"] = (split_done - start) * 1e3
    result.diagnostics["timing_ms"]["cooc"] = (cooc_done - split_done) * 1e3
    return result
