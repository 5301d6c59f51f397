"""Core model types: topic matrices, priors over topic proportions, corpora.

A topic model here is a column-stochastic W x K matrix ``beta`` (word
probabilities per topic) together with a prior on the K-simplex for the
per-document topic proportions.  A word is *novel* for a topic when its row
of beta is supported on that topic alone; a matrix is *separable* when every
topic has at least one novel word.

The module also provides the two population-level matrices the detection
theory runs on: the normalized second-moment matrix of the prior, and the
population limit of the split-corpus co-occurrence statistic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DegeneratePrior, DegenerateWord, NotSeparable

_COLUMN_SUM_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TopicMatrix:
    """Column-stochastic W x K word-by-topic matrix.

    Raises ValueError if entries are negative, any column sum deviates from 1
    by more than 1e-12, or W < K.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = _readonly(np.atleast_2d(self.entries))
        object.__setattr__(self, "entries", entries)
        w, k = entries.shape
        if k < 1 or w < k:
            raise ValueError(f"topic matrix must have W >= K >= 1, got W={w}, K={k}")
        if entries.min(initial=0.0) < 0.0:
            raise ValueError("topic matrix entries must be nonnegative")
        colsums = entries.sum(axis=0)
        bad = np.abs(colsums - 1.0) > _COLUMN_SUM_TOL
        if bad.any():
            raise ValueError(
                f"columns {np.nonzero(bad)[0].tolist()} do not sum to 1 "
                f"(max deviation {np.abs(colsums - 1.0).max():.3e})"
            )

    @property
    def n_words(self) -> int:
        return self.entries.shape[0]

    @property
    def n_topics(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class PriorModel:
    """Prior over topic proportions with exactly known first two moments.

    Two kinds are supported: ``dirichlet`` (moments in closed form) and
    ``mixture`` (finitely supported distribution on the simplex; moments are
    finite sums).  ``mean`` is E[theta], ``second_moment`` is E[theta theta^T];
    both are exact, not sampled.  Use :func:`normalized_correlation` (or the
    ``normalized_second_moment`` property) for the scaled matrix the
    simplicial condition is stated on.
    """

    kind: str
    concentration: np.ndarray | None = None
    support: np.ndarray | None = None
    weights: np.ndarray | None = None
    mean: np.ndarray = field(init=False)
    second_moment: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.kind == "dirichlet":
            alpha = np.asarray(self.concentration, dtype=np.float64)
            if alpha.ndim != 1 or alpha.size < 1 or np.any(alpha <= 0):
                raise DegeneratePrior("dirichlet concentration must be a positive vector")
            object.__setattr__(self, "concentration", _readonly(alpha))
            a0 = alpha.sum()
            mean = alpha / a0
            second = (np.diag(alpha) + np.outer(alpha, alpha)) / (a0 * (a0 + 1.0))
        elif self.kind == "mixture":
            pts = np.atleast_2d(np.asarray(self.support, dtype=np.float64))
            wts = np.asarray(self.weights, dtype=np.float64)
            if wts.ndim != 1 or wts.size != pts.shape[0]:
                raise DegeneratePrior("mixture needs one weight per support point")
            if np.any(wts < 0) or abs(wts.sum() - 1.0) > 1e-12:
                raise DegeneratePrior("mixture weights must be nonnegative and sum to 1")
            if np.any(pts < -1e-15) or np.any(np.abs(pts.sum(axis=1) - 1.0) > 1e-12):
                raise DegeneratePrior("mixture support points must lie on the simplex")
            object.__setattr__(self, "support", _readonly(pts))
            object.__setattr__(self, "weights", _readonly(wts))
            mean = wts @ pts
            second = pts.T @ (pts * wts[:, None])
        else:
            raise DegeneratePrior(f"unknown prior kind {self.kind!r}")
        if np.any(mean <= 0):
            raise DegeneratePrior(
                "prior mean must be strictly positive in every topic; "
                f"got zero mass in topics {np.nonzero(mean <= 0)[0].tolist()}"
            )
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "second_moment", _readonly(second))

    @classmethod
    def dirichlet(cls, concentration) -> "PriorModel":
        return cls(kind="dirichlet", concentration=np.asarray(concentration, dtype=np.float64))

    @classmethod
    def mixture(cls, support, weights) -> "PriorModel":
        return cls(
            kind="mixture",
            support=np.asarray(support, dtype=np.float64),
            weights=np.asarray(weights, dtype=np.float64),
        )

    @property
    def n_topics(self) -> int:
        return self.mean.shape[0]

    @property
    def normalized_second_moment(self) -> np.ndarray:
        """diag(mean)^-1 E[theta theta^T] diag(mean)^-1, recomputed on access."""
        return normalized_correlation(self.second_moment, self.mean)


class Corpus:
    """Sparse W x M matrix of word counts, one column per document.

    Every column sums to ``doc_length``; counts are nonnegative integers.
    Treat instances as read-only.
    """

    def __init__(self, counts: sp.spmatrix, doc_length: int):
        counts = sp.csc_matrix(counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValueError("counts must be a 2-d sparse matrix")
        if counts.nnz and counts.data.min() < 0:
            raise ValueError("counts must be nonnegative")
        doc_length = int(doc_length)
        if doc_length < 1:
            raise ValueError("doc_length must be a positive integer")
        sums = np.asarray(counts.sum(axis=0)).ravel()
        if counts.shape[1] and not np.all(sums == doc_length):
            bad = int(np.nonzero(sums != doc_length)[0][0])
            raise ValueError(
                f"document {bad} has {int(sums[bad])} tokens, expected {doc_length}"
            )
        self.counts = counts
        self.doc_length = doc_length

    @property
    def n_words(self) -> int:
        return self.counts.shape[0]

    @property
    def n_docs(self) -> int:
        return self.counts.shape[1]


@dataclass(frozen=True)
class NovelWordSets:
    """Disjoint nonempty groups of word indices, one group per topic.

    Groups are stored in canonical order (sorted by smallest member), which
    makes equality of two instances mean equality up to topic relabeling.
    """

    groups: tuple[frozenset[int], ...]

    def __post_init__(self):
        groups = tuple(frozenset(int(i) for i in g) for g in self.groups)
        if any(len(g) == 0 for g in groups):
            raise ValueError("every group must be nonempty")
        all_members = [i for g in groups for i in g]
        if len(all_members) != len(set(all_members)):
            raise ValueError("groups must be disjoint")
        groups = tuple(sorted(groups, key=min))
        object.__setattr__(self, "groups", groups)

    @property
    def n_topics(self) -> int:
        return len(self.groups)

    def all_words(self) -> frozenset[int]:
        return frozenset().union(*self.groups)

    def is_transversal(self, words) -> bool:
        """True when ``words`` picks exactly one member from every group."""
        chosen = [int(w) for w in words]
        if len(chosen) != len(self.groups):
            return False
        hits = [sum(w in g for w in chosen) for g in self.groups]
        return all(h == 1 for h in hits)


def _support_sets(entries: np.ndarray, tol: float) -> list[np.ndarray]:
    return [np.nonzero(np.abs(row) > tol)[0] for row in entries]


def _as_entries(beta) -> np.ndarray:
    if isinstance(beta, TopicMatrix):
        return beta.entries
    return np.atleast_2d(np.asarray(beta, dtype=np.float64))


def validate_topic_matrix(beta, tol: float = 0.0) -> dict:
    """Report {'column_stochastic': bool, 'separable': bool} for a candidate matrix.

    ``tol`` controls the zero test for separability: entries with absolute
    value at most ``tol`` count as zeros.  Raises ValueError when the matrix
    has fewer rows than columns.
    """
    entries = _as_entries(beta)
    w, k = entries.shape
    if w < k:
        raise ValueError(f"expected W >= K, got W={w}, K={k}")
    colsums = entries.sum(axis=0)
    column_stochastic = bool(
        entries.min(initial=0.0) >= 0.0
        and np.all(np.abs(colsums - 1.0) <= _COLUMN_SUM_TOL)
    )
    covered = set()
    for support in _support_sets(entries, tol):
        if support.size == 1:
            covered.add(int(support[0]))
    return {"column_stochastic": column_stochastic, "separable": len(covered) == k}


def novel_words_of(beta, tol: float = 0.0) -> NovelWordSets:
    """Group the novel words of each topic; raise NotSeparable if a topic has none.

    A word is novel for topic k when its row is supported on {k} alone, with
    entries of absolute value at most ``tol`` treated as zero.
    """
    entries = _as_entries(beta)
    w, k = entries.shape
    if w < k:
        raise ValueError(f"expected W >= K, got W={w}, K={k}")
    per_topic: list[set[int]] = [set() for _ in range(k)]
    for word, support in enumerate(_support_sets(entries, tol)):
        if support.size == 1:
            per_topic[int(support[0])].add(word)
    missing = [t for t, members in enumerate(per_topic) if not members]
    if missing:
        raise NotSeparable(f"topics {missing} have no novel word")
    return NovelWordSets(tuple(frozenset(g) for g in per_topic))


def normalized_correlation(second_moment: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Scale a second-moment matrix by the inverse mean on both sides.

    Returns diag(mean)^-1 @ second_moment @ diag(mean)^-1.  Raises
    DegeneratePrior when any mean component is not strictly positive.
    """
    r = np.asarray(second_moment, dtype=np.float64)
    a = np.asarray(mean, dtype=np.float64).ravel()
    if r.shape != (a.size, a.size):
        raise ValueError(f"shape mismatch: moment {r.shape} vs mean {a.shape}")
    if np.any(a <= 0):
        raise DegeneratePrior("mean must be strictly positive to normalize")
    inv = 1.0 / a
    return (r * inv[None, :]) * inv[:, None]


def population_cooc(beta, prior: PriorModel, n_tokens: int | None = None) -> np.ndarray:
    """Exact limit of the split-corpus co-occurrence matrix as the corpus grows.

    Entry (i, j) is (beta_i R beta_j^T) / ((beta_i a)(beta_j a)) with a the
    prior mean and R its second moment.  With ``n_tokens`` given, the result
    is scaled by (1 - 1/n_tokens): a document of n tokens contributes ordered
    token pairs without replacement, which shrinks every cross moment by
    exactly that factor at any fixed document length.

    Raises DegenerateWord if some word has an all-zero row (its expected
    frequency is zero, so the statistic is undefined for it).
    """
    entries = _as_entries(beta)
    if entries.shape[1] != prior.n_topics:
        raise ValueError(
            f"topic count mismatch: beta has {entries.shape[1]}, prior has {prior.n_topics}"
        )
    a = prior.mean
    marginals = entries @ a
    if np.any(marginals <= 0):
        dead = np.nonzero(marginals <= 0)[0].tolist()
        raise DegenerateWord(f"words {dead} have zero expected frequency")
    scaled = entries * a[None, :] / marginals[:, None]
    cooc = scaled @ prior.normalized_second_moment @ scaled.T
    if n_tokens is not None:
        n = int(n_tokens)
        if n < 2:
            raise ValueError("n_tokens must be at least 2")
        cooc = cooc * (1.0 - 1.0 / n)
    return cooc


def _prior_to_dict(prior: PriorModel) -> dict:
    if prior.kind == "dirichlet":
        return {"kind": "dirichlet", "concentration": prior.concentration.tolist()}
    return {
        "kind": "mixture",
        "points": prior.support.tolist(),
        "weights": prior.weights.tolist(),
    }


def _prior_from_dict(d: dict) -> PriorModel:
    kind = d.get("kind")
    if kind == "dirichlet":
        return PriorModel.dirichlet(d["concentration"])
    if kind == "mixture":
        return PriorModel.mixture(d["points"], d["weights"])
    raise ValueError(f"unknown prior kind {kind!r}")


def save_model(beta: TopicMatrix, prior: PriorModel, path, config: dict | None = None) -> None:
    """Write a model file: {"W", "K", "beta" (column-major flat list), "prior"}.

    ``config``, when given, is embedded under a "config" key so files record
    how they were produced; readers ignore it.
    """
    doc = {
        "W": beta.n_words,
        "K": beta.n_topics,
        "beta": beta.entries.flatten(order="F").tolist(),
        "prior": _prior_to_dict(prior),
    }
    if config is not None:
        doc["config"] = config
    Path(path).write_text(json.dumps(doc))


def load_model(path) -> tuple[TopicMatrix, PriorModel]:
    """Read a model file written by :func:`save_model`.  Lossless round-trip."""
    doc = json.loads(Path(path).read_text())
    w, k = int(doc["W"]), int(doc["K"])
    flat = np.asarray(doc["beta"], dtype=np.float64)
    if flat.size != w * k:
        raise ValueError(f"beta has {flat.size} entries, expected {w * k}")
    beta = TopicMatrix(flat.reshape((w, k), order="F"))
    prior = _prior_from_dict(doc["prior"])
    if prior.n_topics != k:
        raise ValueError(f"prior has {prior.n_topics} topics, expected {k}")
    return beta, prior
