"""Synthetic data: proportion/corpus sampling and hard-instance constructions.

Beyond plain sampling, this module builds the two families of instances the
identifiability theory revolves around:

* :func:`nonidentifiable_example` returns two *different* separable models
  that generate identically distributed corpora, witnessing that separability
  alone does not pin the model down.
* :func:`adversarial_pair` performs the same construction for any prior whose
  normalized second moment fails the simplicial condition, using the convex
  certificate returned by the hull-distance solver.

Corpora are written and read in a bag-of-words text format (header lines W,
M, NNZ followed by 1-indexed ``doc word count`` triples).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .conditions import dist_to_hull
from .errors import ScaleTooLarge, SimplicialPrior, SolverFailure
from .model import Corpus, PriorModel, TopicMatrix, novel_words_of
from .rng import stream

_SIMPLEX_TOL = 1e-9


def sample_theta(prior: PriorModel, n_docs: int, seed: int) -> np.ndarray:
    """Draw a K x M matrix of topic proportions, one column per document."""
    if n_docs < 1:
        raise ValueError("n_docs must be positive")
    rng = stream(seed, "theta")
    if prior.kind == "dirichlet":
        return rng.dirichlet(prior.concentration, size=n_docs).T
    picks = rng.choice(prior.support.shape[0], size=n_docs, p=prior.weights)
    return prior.support[picks].T


def sample_corpus(beta, theta: np.ndarray, doc_length: int, seed: int) -> Corpus:
    """Sample word counts for each document from Multinomial(N, beta @ theta_m).

    Document m uses its own derived substream (seed, m), so any document's
    counts can be regenerated independently of the rest.
    """
    entries = beta.entries if isinstance(beta, TopicMatrix) else np.asarray(beta, float)
    theta = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    if theta.shape[0] != entries.shape[1]:
        raise ValueError(
            f"theta has {theta.shape[0]} topics, beta has {entries.shape[1]}"
        )
    if np.any(theta < -1e-15) or np.any(np.abs(theta.sum(axis=0) - 1.0) > _SIMPLEX_TOL):
        raise ValueError("theta columns must lie on the simplex")
    n = int(doc_length)
    if n < 1:
        raise ValueError("doc_length must be positive")
    w, m = entries.shape[0], theta.shape[1]
    probs = entries @ theta
    indptr = np.zeros(m + 1, dtype=np.int64)
    index_chunks = []
    data_chunks = []
    for doc in range(m):
        p = probs[:, doc]
        counts = stream(seed, "corpus", doc).multinomial(n, p / p.sum())
        nz = np.nonzero(counts)[0]
        index_chunks.append(nz)
        data_chunks.append(counts[nz])
        indptr[doc + 1] = indptr[doc] + nz.size
    counts = sp.csc_matrix(
        (
            np.concatenate(data_chunks) if data_chunks else np.empty(0, dtype=np.int64),
            np.concatenate(index_chunks) if index_chunks else np.empty(0, dtype=np.int64),
            indptr,
        ),
        shape=(w, m),
        dtype=np.int64,
    )
    return Corpus(counts, doc_length=n)


def random_separable_model(
    n_words: int,
    n_topics: int,
    seed: int,
    max_novel_per_topic: int = 3,
    concentration_range: tuple[float, float] = (0.3, 1.5),
) -> tuple[TopicMatrix, PriorModel]:
    """A random separable model with a Dirichlet prior.

    Each topic gets between 1 and ``max_novel_per_topic`` novel words; the
    remaining rows are full-support mixtures, so the novel-word groups are
    exactly the planted ones.
    """
    rng = stream(seed, "model")
    if n_words < n_topics + 1:
        raise ValueError("need at least one mixed row: n_words > n_topics")
    novel_counts = 1 + rng.integers(0, max_novel_per_topic, size=n_topics)
    while novel_counts.sum() > n_words - 1:
        heavy = int(np.argmax(novel_counts))
        novel_counts[heavy] -= 1
    entries = np.zeros((n_words, n_topics))
    row = 0
    for topic, count in enumerate(novel_counts):
        for _ in range(count):
            entries[row, topic] = rng.uniform(0.5, 1.5)
            row += 1
    entries[row:] = rng.uniform(0.05, 1.0, size=(n_words - row, n_topics))
    entries /= entries.sum(axis=0, keepdims=True)
    prior = PriorModel.dirichlet(rng.uniform(*concentration_range, size=n_topics))
    return TopicMatrix(entries), prior


def dependent_topic_prior(n_topics: int, seed: int, n_support: int | None = None) -> PriorModel:
    """A mixture prior where topic 0's proportion is a fixed nonnegative
    combination of the others, almost surely.

    Such a prior always fails the simplicial condition: the first row of its
    normalized second moment lies in the convex hull of the remaining rows.
    """
    if n_topics < 2:
        raise ValueError("need at least 2 topics")
    rng = stream(seed, "prior")
    if n_support is None:
        n_support = 2 * n_topics + 1
    rel = rng.dirichlet(np.ones(n_topics - 1))
    points = np.empty((n_support, n_topics))
    for i in range(n_support):
        free = rng.uniform(0.1, 1.0, size=n_topics - 1)
        raw = np.concatenate([[rel @ free], free])
        points[i] = raw / raw.sum()
    weights = rng.dirichlet(np.ones(n_support))
    return PriorModel.mixture(points, weights)


def nonidentifiable_example(n_words: int = 8) -> tuple[TopicMatrix, TopicMatrix, PriorModel]:
    """Two distinct separable 3-topic models with identical data distributions.

    The prior concentrates on proportions with theta_2 = (theta_0 + theta_1)/2,
    and the pair of matrices differs only in words 3 and 4: word 3 is a novel
    word of topic 2 in the first model but a (0.5, 0.5, 0) mixture in the
    second, with word 4 playing the opposite role.  Because the two swapped
    rows have equal probability under the prior, beta1 @ theta = beta2 @ theta
    almost surely.  Rows 5 onward are shared full-support filler chosen to
    make both matrices column-stochastic.

    Requires n_words >= 6 (five structured words plus at least one filler row).
    """
    if n_words < 6:
        raise ValueError("n_words must be at least 6")
    scale = 0.2
    e_topic2 = np.array([0.0, 0.0, scale])
    half_mix = np.array([scale / 2.0, scale / 2.0, 0.0])
    core1 = np.array([[scale, 0.0, 0.0], [0.0, scale, 0.0], e_topic2, e_topic2, half_mix])
    core2 = np.array([[scale, 0.0, 0.0], [0.0, scale, 0.0], e_topic2, half_mix, e_topic2])
    mass = core1.sum(axis=0)  # identical for both cores by construction
    n_filler = n_words - 5
    raw = 1.0 + (2 * np.arange(n_filler)[:, None] + 3 * np.arange(3)[None, :]) % 5
    filler = raw / raw.sum(axis=0, keepdims=True) * (1.0 - mass)[None, :]
    beta1 = TopicMatrix(np.vstack([core1, filler]))
    beta2 = TopicMatrix(np.vstack([core2, filler]))
    support = np.array(
        [
            [2.0 / 3.0, 0.0, 1.0 / 3.0],
            [0.0, 2.0 / 3.0, 1.0 / 3.0],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ]
    )
    prior = PriorModel.mixture(support, np.array([0.25, 0.25, 0.5]))
    return beta1, beta2, prior


@dataclass(frozen=True)
class AdversarialPair:
    """Two separable models with equal data distributions under ``prior``.

    ``certificate`` is the vector e with -1 in position 0 and the convex
    weights elsewhere; e^T R' e = 0 certifies that the construction is exact.
    Word 0 is novel (for topic 0) in ``beta1`` and non-novel in ``beta2``.
    """

    beta1: TopicMatrix
    beta2: TopicMatrix
    prior: PriorModel
    certificate: np.ndarray
    row_scale_1: np.ndarray
    row_scale_2: np.ndarray
    filler: TopicMatrix
    b: float
    alpha: float


def adversarial_pair(
    prior: PriorModel, filler: TopicMatrix, b: float, alpha: float
) -> AdversarialPair:
    """Construct two observationally equivalent separable models.

    Requires a prior whose normalized second moment is *not* simplicial, with
    row 0 inside the hull of the remaining rows.  The two models share all
    rows except the first two, which are swapped; the first row of beta1 is
    supported on topic 0 alone while the same word in beta2 is a mixture.

    Args:
        prior: the common prior; raises SimplicialPrior if row 0 of its
            normalized second moment is bounded away from the others' hull.
        filler: separable column-stochastic matrix providing rows 2 onward
            (after column rescaling); must have at least K rows.
        b: positive scale of the two constructed rows.
        alpha: mixing parameter in (0, 1).

    Raises:
        ScaleTooLarge: some component of the combined row mass reaches 1,
            leaving no probability for the filler.
    """
    k = prior.n_topics
    if k < 2:
        raise ValueError("adversarial construction needs at least 2 topics")
    if not b > 0:
        raise ValueError("b must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    novel_words_of(filler)  # raises NotSeparable when the filler is unusable
    rprime = prior.normalized_second_moment
    dist, hull_weights = dist_to_hull(rprime[0], rprime[1:])
    if dist > 1e-9:
        raise SimplicialPrior(
            f"row 0 of the normalized second moment is {dist:.3e} away from "
            "the hull of the others; no equivalent pair exists"
        )
    certificate = np.concatenate([[-1.0], hull_weights])
    quad = float(certificate @ rprime @ certificate)
    if abs(quad) > 1e-10:
        raise SolverFailure(
            f"hull certificate too loose: e^T R' e = {quad:.3e} exceeds 1e-10"
        )
    a = prior.mean
    row1 = np.zeros(k)
    row1[0] = b / a[0]
    row2 = np.empty(k)
    row2[0] = (1.0 - alpha) * b / a[0]
    row2[1:] = alpha * b * hull_weights / a[1:]
    mass = row1 + row2
    if np.any(mass >= 1.0):
        raise ScaleTooLarge(
            f"combined first-two-row mass reaches {mass.max():.3f}; decrease b"
        )
    fill_entries = filler.entries / filler.entries.sum(axis=0, keepdims=True)
    shared = fill_entries * (1.0 - mass)[None, :]
    beta1 = TopicMatrix(np.vstack([row1, row2, shared]))
    beta2 = TopicMatrix(np.vstack([row2, row1, shared]))
    novel_words_of(beta1)
    novel_words_of(beta2)
    return AdversarialPair(
        beta1=beta1,
        beta2=beta2,
        prior=prior,
        certificate=certificate,
        row_scale_1=row1,
        row_scale_2=row2,
        filler=filler,
        b=float(b),
        alpha=float(alpha),
    )


def write_corpus(corpus: Corpus, path) -> None:
    """Write a corpus as bag-of-words text: lines W, M, NNZ then 1-indexed
    ``doc word count`` triples in document-major order."""
    counts = corpus.counts.tocsc(copy=True)
    counts.sort_indices()
    lines = [str(corpus.n_words), str(corpus.n_docs), str(counts.nnz)]
    indptr, indices, data = counts.indptr, counts.indices, counts.data
    for doc in range(corpus.n_docs):
        for pos in range(indptr[doc], indptr[doc + 1]):
            lines.append(f"{doc + 1} {indices[pos] + 1} {data[pos]}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_corpus(path) -> Corpus:
    """Read a corpus written by :func:`write_corpus`.

    The document length is recovered from the (constant) per-document totals.
    """
    with open(path) as fh:
        raw = [line.strip() for line in fh if line.strip()]
    if len(raw) < 3:
        raise ValueError("corpus file too short: expected three header lines")
    n_words, n_docs, nnz = (int(x) for x in raw[:3])
    if len(raw) - 3 != nnz:
        raise ValueError(f"expected {nnz} triples, found {len(raw) - 3}")
    docs = np.empty(nnz, dtype=np.int64)
    words = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.int64)
    for i, line in enumerate(raw[3:]):
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"malformed triple on line {i + 4}: {line!r}")
        docs[i], words[i], vals[i] = (int(p) for p in parts)
    if nnz and (
        docs.min() < 1 or docs.max() > n_docs or words.min() < 1 or words.max() > n_words
    ):
        raise ValueError("triple indices out of range")
    counts = sp.csc_matrix(
        (vals, (words - 1, docs - 1)), shape=(n_words, n_docs), dtype=np.int64
    )
    totals = np.asarray(counts.sum(axis=0)).ravel()
    if n_docs == 0:
        raise ValueError("corpus has no documents")
    if not np.all(totals == totals[0]):
        raise ValueError("documents have unequal lengths; not a fixed-length corpus")
    return Corpus(counts, doc_length=int(totals[0]))
