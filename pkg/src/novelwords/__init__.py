"""Novel-word detection and identifiability checks for separable topic models."""

from .errors import (
    DegenerateGeometry,
    DegeneratePrior,
    DegenerateWord,
    IncompleteRecovery,
    NotSeparable,
    NotSimplicial,
    NovelWordsError,
    ProtocolError,
    ScaleTooLarge,
    ShardMissing,
    SimplicialPrior,
    SolverFailure,
    VersionMismatch,
)
from .model import (
    Corpus,
    NovelWordSets,
    PriorModel,
    TopicMatrix,
    load_model,
    normalized_correlation,
    novel_words_of,
    population_cooc,
    save_model,
    validate_topic_matrix,
)
from .conditions import (
    SimplicialReport,
    dist_to_hull,
    is_diag_dominant,
    is_full_rank,
    is_simplicial,
    min_norm_point,
)
from .cooc import (
    CoocMatrix,
    SplitPair,
    cooc_core,
    cooc_from_core,
    empirical_cooc,
    row_normalize,
    split_corpus,
)
from .dist import (
    CorpusFragment,
    DistributedRun,
    fragment_corpus,
    run_distributed_detection,
    shard_partition,
)
from .oracle import ExtremeRowReport, extreme_rows, oracle_novel_words
from .detect import (
    DetectionResult,
    DetectorConfig,
    detect_from_cooc,
    detect_novel_words,
    estimate_gap,
    gram_distances,
    neighborhoods,
    project_and_count,
    select_novel,
)
from .synth import (
    AdversarialPair,
    adversarial_pair,
    dependent_topic_prior,
    nonidentifiable_example,
    random_separable_model,
    read_corpus,
    sample_corpus,
    sample_theta,
    write_corpus,
)
from .experiment import (
    ExperimentReport,
    ExperimentSpec,
    read_report,
    run_experiment,
    stage_times,
    timing_scaling,
    write_report,
)

__all__ = [
    "CoocMatrix",
    "SplitPair",
    "cooc_core",
    "cooc_from_core",
    "empirical_cooc",
    "row_normalize",
    "split_corpus",
    "CorpusFragment",
    "DistributedRun",
    "fragment_corpus",
    "run_distributed_detection",
    "shard_partition",
    "ExtremeRowReport",
    "extreme_rows",
    "oracle_novel_words",
    "DetectionResult",
    "DetectorConfig",
    "detect_from_cooc",
    "detect_novel_words",
    "estimate_gap",
    "gram_distances",
    "neighborhoods",
    "project_and_count",
    "select_novel",
    "AdversarialPair",
    "adversarial_pair",
    "dependent_topic_prior",
    "nonidentifiable_example",
    "random_separable_model",
    "read_corpus",
    "sample_corpus",
    "sample_theta",
    "write_corpus",
    "ExperimentReport",
    "ExperimentSpec",
    "read_report",
    "run_experiment",
    "stage_times",
    "timing_scaling",
    "write_report",
    "Corpus",
    "NovelWordSets",
    "PriorModel",
    "TopicMatrix",
    "SimplicialReport",
    "load_model",
    "save_model",
    "normalized_correlation",
    "novel_words_of",
    "population_cooc",
    "validate_topic_matrix",
    "dist_to_hull",
    "is_diag_dominant",
    "is_full_rank",
    "is_simplicial",
    "min_norm_point",
    "NovelWordsError",
    "NotSeparable",
    "DegeneratePrior",
    "DegenerateWord",
    "SimplicialPrior",
    "ScaleTooLarge",
    "SolverFailure",
    "IncompleteRecovery",
    "DegenerateGeometry",
    "NotSimplicial",
    "ShardMissing",
    "VersionMismatch",
    "ProtocolError",
]
