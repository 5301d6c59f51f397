"""Empirical word co-occurrence from split documents.

Each document's tokens are thinned into two halves with independent fair
coin flips; the co-occurrence estimator cross-multiplies the halves so that
the diagonal is as unbiased as the off-diagonal entries.  The estimator is

    C = M * S / outer(t2, t1),   S = X2 @ X1^T,

where X1, X2 hold the per-document half counts, t1, t2 are the corpus-wide
word totals of each half, and M is the number of documents.  S and the
totals are plain integer sums, which makes the computation exactly
additive over any partition of the documents: summing per-fragment cores
and scaling once reproduces the single-machine result bit for bit.

As the corpus grows, C converges to (1 - 1/N) times the population matrix
(see :func:`novelwords.model.population_cooc` with ``n_tokens`` set), where
N is the document length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import Corpus
from .rng import stream


@dataclass(frozen=True)
class SplitPair:
    """Two halves of a corpus after per-token binomial thinning."""

    half1: sp.csc_matrix
    half2: sp.csc_matrix

    @property
    def n_words(self) -> int:
        return self.half1.shape[0]

    @property
    def n_docs(self) -> int:
        return self.half1.shape[1]


@dataclass(frozen=True)
class CoocMatrix:
    """Normalized co-occurrence estimate with bookkeeping.

    ``zero_rows`` flags words absent from either half; their rows and
    columns are zeroed rather than divided by zero.
    """

    matrix: np.ndarray
    zero_rows: np.ndarray
    n_docs: int


def split_corpus(corpus: Corpus, seed: int, doc_offset: int = 0) -> SplitPair:
    """Thin each document into two halves with fair coin flips per token.

    Document m draws from the substream (seed, doc_offset + m), where the
    offset is the document's global index.  A fragment of a corpus split
    with the correct offset therefore produces exactly the columns the
    whole-corpus split would.
    """
    counts = corpus.counts.tocsc()
    data = counts.data
    first = np.empty_like(data)
    indptr = counts.indptr
    for doc in range(corpus.n_docs):
        lo, hi = indptr[doc], indptr[doc + 1]
        if hi > lo:
            rng = stream(seed, "split", doc_offset + doc)
            first[lo:hi] = rng.binomial(data[lo:hi], 0.5)
    half1 = sp.csc_matrix(
        (first, counts.indices.copy(), indptr.copy()), shape=counts.shape
    )
    half2 = sp.csc_matrix(
        (data - first, counts.indices.copy(), indptr.copy()), shape=counts.shape
    )
    half1.eliminate_zeros()
    half2.eliminate_zeros()
    return SplitPair(half1, half2)


def row_normalize(counts: sp.spmatrix) -> tuple[sp.csr_matrix, np.ndarray]:
    """Scale each word's row to sum to 1 across all documents.

    Zero rows are left zero and their indices are reported.  The estimator
    itself works on unnormalized integer statistics (see :func:`cooc_core`)
    and divides once at the end, which is algebraically the same thing.
    """
    counts = counts.tocsr().astype(np.float64)
    totals = np.asarray(counts.sum(axis=1)).ravel()
    zero = totals == 0.0
    inverse = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, totals))
    scaled = sp.diags(inverse) @ counts
    return scaled.tocsr(), np.nonzero(zero)[0]


def cooc_core(split: SplitPair) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer sufficient statistics of a split: (S, t1, t2).

    S[i, j] sums half2-count of word i times half1-count of word j over
    documents; t1 and t2 are per-word corpus totals.  All entries are exact
    int64, so cores from disjoint document sets add.
    """
    s = np.asarray((split.half2 @ split.half1.T).todense(), dtype=np.int64)
    t1 = np.asarray(split.half1.sum(axis=1), dtype=np.int64).ravel()
    t2 = np.asarray(split.half2.sum(axis=1), dtype=np.int64).ravel()
    return s, t1, t2


def cooc_from_core(
    s: np.ndarray, t1: np.ndarray, t2: np.ndarray, n_docs: int
) -> CoocMatrix:
    """Scale integer statistics into the normalized co-occurrence matrix."""
    if n_docs < 1:
        raise ValueError("n_docs must be positive")
    zero = (t1 == 0) | (t2 == 0)
    denom = np.outer(np.where(t2 == 0, 1, t2), np.where(t1 == 0, 1, t1))
    matrix = float(n_docs) * s.astype(np.float64) / denom.astype(np.float64)
    matrix[zero, :] = 0.0
    matrix[:, zero] = 0.0
    return CoocMatrix(matrix=matrix, zero_rows=zero, n_docs=int(n_docs))


def empirical_cooc(corpus: Corpus, seed: int) -> CoocMatrix:
    """Split a corpus and form its normalized co-occurrence estimate."""
    split = split_corpus(corpus, seed)
    s, t1, t2 = cooc_core(split)
    return cooc_from_core(s, t1, t2, corpus.n_docs)
