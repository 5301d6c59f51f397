"""Tests for the projection-based novel-word detector."""

import numpy as np
import pytest

from novelwords import (
    DegenerateGeometry,
    IncompleteRecovery,
    PriorModel,
    TopicMatrix,
    novel_words_of,
    population_cooc,
    random_separable_model,
    sample_corpus,
    sample_theta,
)
from novelwords.cooc import CoocMatrix, empirical_cooc
from novelwords.detect import (
    DetectorConfig,
    DetectionResult,
    detect_from_cooc,
    detect_novel_words,
    estimate_gap,
    gram_distances,
    neighborhoods,
    project_and_count,
    select_novel,
)
from novelwords.rng import stream

# population co-occurrence of a 3-word, 2-topic model under a flat prior;
# row 2 is the average of rows 0 and 1
REF_COOC = np.array(
    [
        [4.0 / 3.0, 2.0 / 3.0, 1.0],
        [2.0 / 3.0, 4.0 / 3.0, 1.0],
        [1.0, 1.0, 1.0],
    ]
)

# rows 0 and 1 coincide, row 2 is far from both
DUPLICATE_COOC = np.array(
    [
        [2.0, 2.0, 0.0],
        [2.0, 2.0, 0.0],
        [0.0, 0.0, 2.0],
    ]
)


def _population_cooc_matrix(matrix: np.ndarray) -> CoocMatrix:
    w = matrix.shape[0]
    return CoocMatrix(matrix=matrix, zero_rows=np.zeros(w, dtype=bool), n_docs=1)


class TestGramDistances:
    def test_known_values(self):
        gaps = gram_distances(REF_COOC)
        assert gaps[0, 0] == 0.0
        np.testing.assert_allclose(gaps[0, 1], 4.0 / 3.0)
        np.testing.assert_allclose(gaps[0, 2], 1.0 / 3.0)
        np.testing.assert_allclose(gaps, gaps.T)

    def test_matches_row_geometry_for_gram_matrices(self):
        # when C = A A^T, the statistic is the squared row distance
        rng = np.random.default_rng(0)
        a = rng.normal(size=(5, 3))
        c = a @ a.T
        gaps = gram_distances(c)
        for i in range(5):
            for j in range(5):
                np.testing.assert_allclose(
                    gaps[i, j], np.sum((a[i] - a[j]) ** 2), atol=1e-12
                )


class TestEstimateGap:
    def test_quantile_of_positive_gaps(self):
        # positive upper-triangle gaps of DUPLICATE_COOC are {4, 4}
        assert estimate_gap(DUPLICATE_COOC) == pytest.approx(8.0)

    def test_all_equal_rows_degenerate(self):
        with pytest.raises(DegenerateGeometry):
            estimate_gap(np.ones((4, 4)))

    def test_active_mask_restricts_pairs(self):
        active = np.array([True, True, False])
        with pytest.raises(DegenerateGeometry):
            estimate_gap(DUPLICATE_COOC, active=active)

    def test_asymmetric_matrix_pools_both_orders(self):
        # s(0,1) = 1.8 but s(1,0) = 0.2: the estimate must see the smaller
        # statistic even though it lives in the lower triangle
        c = np.array([[1.0, 0.1, 0.0], [0.9, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert estimate_gap(c) == pytest.approx(0.4)

    def test_order_statistic_never_exceeds_observed_gap(self):
        # distinct gaps: an interpolated quantile would land above the min
        c = np.diag([1.0, 2.0, 4.0]).astype(float)
        gaps = gram_distances(c)
        off = gaps[~np.eye(3, dtype=bool)]
        assert estimate_gap(c) == pytest.approx(2.0 * off[off > 0].min())


class TestNeighborhoods:
    def test_threshold_and_diagonal(self):
        nbd = neighborhoods(REF_COOC, gram_gap=0.5)
        assert not nbd.diagonal().any()
        # gaps: (0,1) -> 4/3 >= 0.25, (0,2) -> 1/3 >= 0.25
        assert nbd[0, 1] and nbd[0, 2] and nbd[1, 2]

    def test_large_gap_empties_neighborhoods(self):
        nbd = neighborhoods(REF_COOC, gram_gap=10.0)
        assert not nbd.any()

    def test_inactive_words_excluded(self):
        active = np.array([True, False, True])
        nbd = neighborhoods(REF_COOC, gram_gap=0.5, active=active)
        assert not nbd[1].any()
        assert not nbd[:, 1].any()


class TestProjectAndCount:
    def test_interior_word_never_wins(self):
        nbd = neighborhoods(REF_COOC, gram_gap=0.5)
        phat = project_and_count(REF_COOC, nbd, 400, seed=5)
        assert phat[2] == 0.0
        assert phat[0] > 0.3 and phat[1] > 0.3
        np.testing.assert_allclose(phat[0] + phat[1], 1.0, atol=0.1)

    def test_empty_neighborhood_always_wins(self):
        nbd = np.zeros((3, 3), dtype=bool)
        phat = project_and_count(REF_COOC, nbd, 50, seed=1)
        np.testing.assert_array_equal(phat, 1.0)

    def test_matches_manual_projection(self):
        nbd = neighborhoods(DUPLICATE_COOC, gram_gap=8.0)
        p = 7
        phat = project_and_count(DUPLICATE_COOC, nbd, p, seed=11)
        wins = np.zeros(3)
        for r in range(p):
            u = stream(11, "proj", r).standard_normal(3)
            v = DUPLICATE_COOC @ u
            for i in range(3):
                rivals = v[nbd[i]]
                if rivals.size == 0 or v[i] >= rivals.max():
                    wins[i] += 1
        np.testing.assert_allclose(phat, wins / p)

    def test_inactive_words_score_zero(self):
        nbd = neighborhoods(REF_COOC, gram_gap=0.5)
        active = np.array([True, True, False])
        phat = project_and_count(REF_COOC, nbd, 100, seed=2, active=active)
        assert phat[2] == 0.0


class TestSelectNovel:
    def test_prefers_high_phat_and_separation(self):
        nbd = neighborhoods(REF_COOC, gram_gap=0.5)
        phat = np.array([0.5, 0.45, 0.05])
        selected, scanned = select_novel(nbd, phat, 2)
        assert selected == [0, 1]
        assert scanned == 2

    def test_ties_break_toward_lower_index(self):
        nbd = neighborhoods(REF_COOC, gram_gap=0.5)
        phat = np.array([0.4, 0.4, 0.4])
        selected, _ = select_novel(nbd, phat, 2)
        assert selected == [0, 1]

    def test_duplicate_of_selected_word_is_skipped(self):
        nbd = neighborhoods(DUPLICATE_COOC, gram_gap=8.0)
        phat = np.array([0.5, 0.5, 0.4])
        selected, scanned = select_novel(nbd, phat, 2)
        assert selected == [0, 2]
        assert scanned == 3

    def test_incomplete_recovery_carries_partial_result(self):
        nbd = neighborhoods(DUPLICATE_COOC, gram_gap=8.0)
        phat = np.array([0.5, 0.5, 0.4])
        with pytest.raises(IncompleteRecovery) as info:
            select_novel(nbd, phat, 3)
        assert info.value.selected == [0, 2]


class TestDetectorConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            DetectorConfig(n_topics=0)
        with pytest.raises(ValueError):
            DetectorConfig(n_topics=2, n_projections=0)
        with pytest.raises(ValueError):
            DetectorConfig(n_topics=2, gram_gap=-1.0)


class TestDetectFromCooc:
    def test_population_matrix_recovers_groups_exactly(self):
        beta, prior = random_separable_model(14, 3, seed=2)
        cooc = _population_cooc_matrix(population_cooc(beta, prior))
        result = detect_from_cooc(cooc, DetectorConfig(n_topics=3, seed=0))
        groups = novel_words_of(beta)
        assert groups.is_transversal(result.selected)

    def test_supplied_gap_is_respected(self):
        cooc = _population_cooc_matrix(REF_COOC)
        result = detect_from_cooc(
            cooc, DetectorConfig(n_topics=2, gram_gap=0.5, seed=3)
        )
        assert result.diagnostics["gram_gap"] == 0.5
        assert result.diagnostics["gap_estimated"] is False
        assert sorted(result.selected) == [0, 1]

    def test_too_few_present_words(self):
        cooc = CoocMatrix(
            matrix=np.zeros((3, 3)),
            zero_rows=np.array([False, True, True]),
            n_docs=5,
        )
        with pytest.raises(IncompleteRecovery):
            detect_from_cooc(cooc, DetectorConfig(n_topics=2))

    def test_diagnostics_populated(self):
        cooc = _population_cooc_matrix(REF_COOC)
        result = detect_from_cooc(cooc, DetectorConfig(n_topics=2, seed=0))
        assert result.diagnostics["gap_estimated"] is True
        assert result.diagnostics["scan_depth"] >= 2
        timing = result.diagnostics["timing_ms"]
        assert timing["project"] >= 0.0 and timing["select"] >= 0.0
        assert result.nbd_sizes.shape == (3,)


class TestDetectNovelWords:
    def test_end_to_end_recovery(self):
        beta, prior = random_separable_model(12, 3, seed=7)
        theta = sample_theta(prior, 6000, seed=8)
        corpus = sample_corpus(beta, theta, 80, seed=9)
        result = detect_novel_words(corpus, n_topics=3, seed=10)
        assert novel_words_of(beta).is_transversal(result.selected)

    def test_deterministic_for_fixed_seed(self):
        beta, prior = random_separable_model(10, 2, seed=3)
        theta = sample_theta(prior, 1500, seed=4)
        corpus = sample_corpus(beta, theta, 50, seed=5)
        a = detect_novel_words(corpus, n_topics=2, seed=6)
        b = detect_novel_words(corpus, n_topics=2, seed=6)
        assert a.selected == b.selected
        np.testing.assert_array_equal(a.phat, b.phat)

    def test_result_type(self):
        beta, prior = random_separable_model(8, 2, seed=1)
        theta = sample_theta(prior, 800, seed=2)
        corpus = sample_corpus(beta, theta, 40, seed=3)
        result = detect_novel_words(corpus, n_topics=2, seed=4)
        assert isinstance(result, DetectionResult)
        assert len(result.selected) == 2

    def test_selection_is_scale_invariant(self):
        beta, prior = random_separable_model(11, 3, seed=15)
        matrix = population_cooc(beta, prior)
        base = detect_from_cooc(
            _population_cooc_matrix(matrix),
            DetectorConfig(n_topics=3, gram_gap=0.4, seed=2),
        )
        scaled = detect_from_cooc(
            _population_cooc_matrix(3.7 * matrix),
            DetectorConfig(n_topics=3, gram_gap=3.7 * 0.4, seed=2),
        )
        assert scaled.selected == base.selected
        np.testing.assert_array_equal(scaled.phat, base.phat)

    def test_estimated_gap_tracks_population_separation(self):
        # On a model whose only non-novel word sits at the topic centroid,
        # the estimate lands within a factor of 4 of the smallest cross-topic
        # separation between novel-word rows.  (With many mutually close
        # mixed rows the quantile instead tracks the mixed-row gap scale,
        # which is still a valid neighborhood threshold but not comparable
        # to the novel separation.)
        raw = np.vstack([np.eye(3), [[1 / 3, 1 / 3, 1 / 3]]])
        beta = TopicMatrix(raw / raw.sum(axis=0, keepdims=True))
        prior = PriorModel.dirichlet([0.8, 1.0, 1.2])
        theta = sample_theta(prior, 100_000, seed=22)
        corpus = sample_corpus(beta, theta, 60, seed=23)
        d_hat = estimate_gap(empirical_cooc(corpus, seed=24).matrix)

        pop_gaps = gram_distances(population_cooc(beta, prior))
        groups = novel_words_of(beta).groups
        separation = min(
            pop_gaps[i, j]
            for a in range(len(groups))
            for b in range(len(groups))
            if a != b
            for i in groups[a]
            for j in groups[b]
        )
        assert separation / 4 <= d_hat <= separation * 4
