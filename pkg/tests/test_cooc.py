"""Tests for document splitting and the co-occurrence estimator."""

import numpy as np
import pytest

from novelwords import (
    Corpus,
    PriorModel,
    TopicMatrix,
    population_cooc,
    random_separable_model,
    sample_corpus,
    sample_theta,
)
from novelwords.cooc import (
    cooc_core,
    cooc_from_core,
    empirical_cooc,
    row_normalize,
    split_corpus,
)

REF_BETA = TopicMatrix(np.array([[0.6, 0.0], [0.0, 0.6], [0.4, 0.4]]))
REF_PRIOR = PriorModel.dirichlet(np.array([1.0, 1.0]))


def _small_corpus(n_docs=25, doc_length=40, seed=0):
    beta, prior = random_separable_model(10, 3, seed=seed)
    theta = sample_theta(prior, n_docs, seed=seed + 1)
    return sample_corpus(beta, theta, doc_length, seed=seed + 2)


class TestSplitCorpus:
    def test_halves_sum_back_to_corpus(self):
        corpus = _small_corpus()
        split = split_corpus(corpus, seed=3)
        total = split.half1.toarray() + split.half2.toarray()
        np.testing.assert_array_equal(total, corpus.counts.toarray())

    def test_split_is_deterministic(self):
        corpus = _small_corpus()
        a = split_corpus(corpus, seed=3)
        b = split_corpus(corpus, seed=3)
        c = split_corpus(corpus, seed=4)
        np.testing.assert_array_equal(a.half1.toarray(), b.half1.toarray())
        assert not np.array_equal(a.half1.toarray(), c.half1.toarray())

    def test_doc_offset_matches_whole_corpus_split(self):
        # splitting a fragment with its global offset reproduces the
        # corresponding columns of the whole-corpus split
        corpus = _small_corpus(n_docs=12)
        whole = split_corpus(corpus, seed=9)
        frag = Corpus(corpus.counts[:, 4:9], doc_length=corpus.doc_length)
        part = split_corpus(frag, seed=9, doc_offset=4)
        np.testing.assert_array_equal(
            part.half1.toarray(), whole.half1[:, 4:9].toarray()
        )
        np.testing.assert_array_equal(
            part.half2.toarray(), whole.half2[:, 4:9].toarray()
        )

    def test_half_totals_are_balanced(self):
        corpus = _small_corpus(n_docs=400, doc_length=60, seed=5)
        split = split_corpus(corpus, seed=6)
        n1 = split.half1.sum()
        total = 400 * 60
        sd = np.sqrt(total * 0.25)
        assert abs(n1 - total / 2) < 5 * sd


class TestRowNormalize:
    def test_nonzero_rows_sum_to_one(self):
        corpus = _small_corpus()
        scaled, zero = row_normalize(corpus.counts)
        sums = np.asarray(scaled.sum(axis=1)).ravel()
        np.testing.assert_allclose(sums, 1.0, atol=1e-12)
        assert zero.size == 0

    def test_known_row(self):
        import scipy.sparse as sp

        counts = sp.csc_matrix(np.array([[1, 1, 2], [0, 0, 0]]))
        scaled, zero = row_normalize(counts)
        np.testing.assert_allclose(
            scaled.toarray(), [[0.25, 0.25, 0.5], [0.0, 0.0, 0.0]]
        )
        np.testing.assert_array_equal(zero, [1])

    def test_matches_core_based_estimator(self):
        # M * rowstoch(half2) @ rowstoch(half1).T is the same statistic the
        # integer core produces after its single normalization
        corpus = _small_corpus(n_docs=15)
        split = split_corpus(corpus, seed=4)
        direct = empirical_cooc(corpus, seed=4)
        x1, _ = row_normalize(split.half1)
        x2, _ = row_normalize(split.half2)
        literal = corpus.n_docs * (x2 @ x1.T).toarray()
        np.testing.assert_allclose(literal, direct.matrix, atol=1e-9)


class TestCoocCore:
    def test_additive_over_document_fragments(self):
        corpus = _small_corpus(n_docs=30)
        split = split_corpus(corpus, seed=1)
        s_all, t1_all, t2_all = cooc_core(split)
        s_sum = np.zeros_like(s_all)
        t1_sum = np.zeros_like(t1_all)
        t2_sum = np.zeros_like(t2_all)
        for lo, hi in [(0, 7), (7, 19), (19, 30)]:
            frag = Corpus(corpus.counts[:, lo:hi], doc_length=corpus.doc_length)
            part = split_corpus(frag, seed=1, doc_offset=lo)
            s, t1, t2 = cooc_core(part)
            s_sum += s
            t1_sum += t1
            t2_sum += t2
        np.testing.assert_array_equal(s_sum, s_all)
        np.testing.assert_array_equal(t1_sum, t1_all)
        np.testing.assert_array_equal(t2_sum, t2_all)

    def test_fragmented_estimate_is_bitwise_identical(self):
        corpus = _small_corpus(n_docs=30)
        direct = empirical_cooc(corpus, seed=1)
        s = t1 = t2 = 0
        for lo, hi in [(0, 11), (11, 30)]:
            frag = Corpus(corpus.counts[:, lo:hi], doc_length=corpus.doc_length)
            part = cooc_core(split_corpus(frag, seed=1, doc_offset=lo))
            s = s + part[0]
            t1 = t1 + part[1]
            t2 = t2 + part[2]
        merged = cooc_from_core(s, t1, t2, corpus.n_docs)
        assert np.array_equal(merged.matrix, direct.matrix)

    def test_core_matches_dense_formula(self):
        corpus = _small_corpus(n_docs=8)
        split = split_corpus(corpus, seed=2)
        s, t1, t2 = cooc_core(split)
        x1 = split.half1.toarray()
        x2 = split.half2.toarray()
        np.testing.assert_array_equal(s, x2 @ x1.T)
        np.testing.assert_array_equal(t1, x1.sum(axis=1))
        np.testing.assert_array_equal(t2, x2.sum(axis=1))


class TestCoocMatrix:
    def test_converges_to_population_limit(self):
        n, m = 50, 40_000
        theta = sample_theta(REF_PRIOR, m, seed=11)
        corpus = sample_corpus(REF_BETA, theta, n, seed=12)
        est = empirical_cooc(corpus, seed=13)
        limit = population_cooc(REF_BETA, REF_PRIOR, n_tokens=n)
        assert not est.zero_rows.any()
        np.testing.assert_allclose(est.matrix, limit, atol=0.05)

    def test_absent_word_flagged_and_zeroed(self):
        counts = np.array([[3, 2], [2, 3], [0, 0]])
        corpus = Corpus(counts, doc_length=5)
        est = empirical_cooc(corpus, seed=0)
        np.testing.assert_array_equal(est.zero_rows, [False, False, True])
        assert np.all(est.matrix[2, :] == 0)
        assert np.all(est.matrix[:, 2] == 0)
        assert np.all(np.isfinite(est.matrix))

    def test_word_missing_from_one_half_only(self):
        # a single token can land in only one half, leaving the other empty
        counts = np.array([[1], [9]])
        corpus = Corpus(counts, doc_length=10)
        for seed in range(6):
            est = empirical_cooc(corpus, seed=seed)
            assert np.all(np.isfinite(est.matrix))
            split = split_corpus(corpus, seed=seed)
            if split.half1[0, 0] == 0 or split.half2[0, 0] == 0:
                assert est.zero_rows[0]

    def test_rejects_empty_document_count(self):
        with pytest.raises(ValueError):
            cooc_from_core(np.zeros((2, 2)), np.zeros(2), np.zeros(2), 0)
