"""Seeded experiment harness: consistency ladders and timing scans.

An experiment fixes a model and sweeps corpus sizes, running several
independent generate-split-detect trials per size and scoring each trial by
whether the selected words form a transversal of the model's true novel
word groups (exactly one representative per topic).  As the corpus grows
the success rate should climb to 1; the report records the whole curve.

Reports are written as a CSV (with the resolved configuration embedded in
a leading comment line) plus a JSON sidecar carrying the same rows.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .detect import DetectorConfig, detect_from_cooc, detect_novel_words
from .cooc import cooc_core, cooc_from_core, split_corpus
from .dist import run_distributed_detection
from .errors import DegenerateGeometry, IncompleteRecovery, SolverFailure
from .model import NovelWordSets, PriorModel, TopicMatrix, novel_words_of
from .rng import stream
from .synth import random_separable_model, sample_corpus, sample_theta


@dataclass(frozen=True)
class ExperimentSpec:
    """Parameters of a consistency experiment.

    The model is drawn once from ``model_seed`` (unless the caller passes
    an explicit model); trial randomness derives from ``seed`` so the two
    never interact.
    """

    n_words: int = 30
    n_topics: int = 3
    doc_length: int = 200
    n_projections: int = 500
    m_ladder: tuple[int, ...] = (100, 1000, 10_000)
    trials: int = 20
    seed: int = 0
    model_seed: int = 0
    gram_gap: float | None = None
    n_shards: int = 1
    light: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.n_shards < 1:
            raise ValueError("n_shards must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        ladder = tuple(self.m_ladder)
        if len(ladder) < 1 or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("m_ladder must be nonempty and strictly increasing")
        object.__setattr__(self, "m_ladder", ladder)


@dataclass(frozen=True)
class ExperimentReport:
    config: dict
    rows: list[dict] = field(default_factory=list)


def trial_seed(seed: int, m_index: int, trial: int) -> int:
    """A fresh integer seed for one trial, independent across all trials."""
    return int(stream(seed, "trial", m_index, trial).integers(1 << 63))


def _phat_gap(phat: np.ndarray, selected: list[int], groups: NovelWordSets) -> float:
    """Margin of the selected words' win rates over all mixed words.

    Unselected novel words are excluded from the floor: a topic with several
    novel words splits its wins among them, and the rejected siblings can
    rank arbitrarily high without that saying anything about recovery.
    """
    mixed = np.delete(phat, sorted(groups.all_words()))
    floor = float(mixed.max()) if mixed.size else 0.0
    return float(phat[selected].min()) - floor


def run_trial(
    beta: TopicMatrix,
    prior: PriorModel,
    groups: NovelWordSets,
    n_docs: int,
    doc_length: int,
    config: DetectorConfig,
    n_shards: int = 1,
    light: bool = False,
) -> dict:
    """One generate-split-detect cycle, scored against the true groups."""
    t0 = time.perf_counter()
    theta = sample_theta(prior, n_docs, seed=config.seed)
    corpus = sample_corpus(beta, theta, doc_length, seed=config.seed)
    generated = time.perf_counter()
    outcome = {
        "generate_s": generated - t0,
        "split_s": 0.0,
        "cooc_s": 0.0,
        "project_s": 0.0,
        "select_s": 0.0,
        "success": False,
        "error": "",
        "phat_gap": float("nan"),
    }
    try:
        if n_shards > 1:
            result = run_distributed_detection(
                corpus, config, n_shards, mode="light" if light else "faithful"
            ).result
        else:
            result = detect_novel_words(
                corpus,
                n_topics=config.n_topics,
                n_projections=config.n_projections,
                gram_gap=config.gram_gap,
                seed=config.seed,
            )
    except (IncompleteRecovery, DegenerateGeometry, SolverFailure) as err:
        outcome["error"] = type(err).__name__
        return outcome
    timing = result.diagnostics["timing_ms"]
    outcome["split_s"] = timing["split"] / 1e3
    outcome["cooc_s"] = timing["cooc"] / 1e3
    outcome["project_s"] = timing["project"] / 1e3
    outcome["select_s"] = timing["select"] / 1e3
    outcome["success"] = groups.is_transversal(result.selected)
    outcome["phat_gap"] = _phat_gap(result.phat, result.selected, groups)
    return outcome


def run_experiment(
    spec: ExperimentSpec,
    beta: TopicMatrix | None = None,
    prior: PriorModel | None = None,
) -> ExperimentReport:
    """Sweep the corpus-size ladder, aggregating per-size trial statistics."""
    if (beta is None) != (prior is None):
        raise ValueError("provide both beta and prior, or neither")
    if beta is None:
        beta, prior = random_separable_model(
            spec.n_words, spec.n_topics, seed=spec.model_seed
        )
    groups = novel_words_of(beta)
    rows = []
    for m_index, n_docs in enumerate(spec.m_ladder):

        def one(t: int, n_docs=n_docs, m_index=m_index) -> dict:
            return run_trial(
                beta,
                prior,
                groups,
                n_docs,
                spec.doc_length,
                DetectorConfig(
                    n_topics=beta.n_topics,
                    n_projections=spec.n_projections,
                    gram_gap=spec.gram_gap,
                    seed=trial_seed(spec.seed, m_index, t),
                ),
                n_shards=spec.n_shards,
                light=spec.light,
            )

        if spec.workers > 1:
            with ThreadPoolExecutor(max_workers=spec.workers) as pool:
                trials = list(pool.map(one, range(spec.trials)))
        else:
            trials = [one(t) for t in range(spec.trials)]
        successes = sum(t["success"] for t in trials)
        gaps = [t["phat_gap"] for t in trials if not np.isnan(t["phat_gap"])]
        rows.append(
            {
                "m": n_docs,
                "trials": spec.trials,
                "successes": successes,
                "success_rate": successes / spec.trials,
                "errors": sum(bool(t["error"]) for t in trials),
                "mean_phat_gap": float(np.mean(gaps)) if gaps else float("nan"),
                "mean_generate_s": float(np.mean([t["generate_s"] for t in trials])),
                "mean_cooc_s": float(np.mean([t["split_s"] + t["cooc_s"] for t in trials])),
                "mean_project_s": float(np.mean([t["project_s"] for t in trials])),
                "mean_select_s": float(np.mean([t["select_s"] for t in trials])),
            }
        )
    config = asdict(spec)
    config["m_ladder"] = list(spec.m_ladder)
    return ExperimentReport(config=config, rows=rows)


def stage_times(
    beta: TopicMatrix,
    prior: PriorModel,
    n_docs: int,
    doc_length: int,
    config: DetectorConfig,
    repeats: int = 3,
) -> dict:
    """Best-of-``repeats`` wall time of each pipeline stage, in seconds."""
    theta = sample_theta(prior, n_docs, seed=config.seed)
    corpus = sample_corpus(beta, theta, doc_length, seed=config.seed)
    best: dict[str, float] = {}
    for _ in range(repeats):
        t0 = time.perf_counter()
        split = split_corpus(corpus, config.seed)
        t1 = time.perf_counter()
        cooc = cooc_from_core(*cooc_core(split), corpus.n_docs)
        t2 = time.perf_counter()
        result = detect_from_cooc(cooc, config)
        timing = result.diagnostics["timing_ms"]
        sample = {
            "split_s": t1 - t0,
            "cooc_s": t2 - t1,
            "project_s": timing["project"] / 1e3,
            "select_s": timing["select"] / 1e3,
        }
        sample["total_s"] = sum(sample.values())
        for k, v in sample.items():
            best[k] = min(best.get(k, np.inf), v)
    return best


def timing_scaling(
    spec: ExperimentSpec,
    axis: str,
    values: list[int],
    repeats: int = 3,
) -> ExperimentReport:
    """Stage wall times along one scaling axis (m, p, or w).

    Each report row carries the axis value and stage times; consecutive
    rows include the time ratios, which should track the axis ratio for
    the stage the axis drives (documents -> cooc, projections -> project).
    """
    if axis not in ("m", "p", "w"):
        raise ValueError("axis must be one of 'm', 'p', 'w'")
    if len(values) < 2:
        raise ValueError("need at least two axis values to compare")
    rows = []
    for value in values:
        n_words = value if axis == "w" else spec.n_words
        beta, prior = random_separable_model(
            n_words, spec.n_topics, seed=spec.model_seed
        )
        config = DetectorConfig(
            n_topics=spec.n_topics,
            n_projections=value if axis == "p" else spec.n_projections,
            gram_gap=spec.gram_gap,
            seed=spec.seed,
        )
        n_docs = value if axis == "m" else spec.m_ladder[-1]
        row: dict = {axis: value}
        row.update(
            stage_times(beta, prior, n_docs, spec.doc_length, config, repeats=repeats)
        )
        rows.append(row)
    for prev, cur in zip(rows, rows[1:]):
        for stage in ("split_s", "cooc_s", "project_s", "select_s", "total_s"):
            cur[f"{stage}_ratio"] = cur[stage] / prev[stage] if prev[stage] > 0 else float("inf")
    config = asdict(spec)
    config["m_ladder"] = list(spec.m_ladder)
    config.update({"axis": axis, "values": list(values), "repeats": repeats})
    return ExperimentReport(config=config, rows=rows)


def write_report(report: ExperimentReport, csv_path) -> Path:
    """Write rows as CSV with the resolved config embedded, plus a JSON twin.

    The CSV's first line is ``# config = {...}``; the sidecar JSON carries
    the identical config and rows for machine consumption.  Returns the
    sidecar path.
    """
    csv_path = Path(csv_path)
    fields: list[str] = []
    for row in report.rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# config = {json.dumps(report.config, sort_keys=True)}\n")
        writer = csv.DictWriter(fh, fieldnames=fields, restval="")
        writer.writeheader()
        writer.writerows(report.rows)
    sidecar = csv_path.with_suffix(".json")
    sidecar.write_text(
        json.dumps({"config": report.config, "rows": report.rows}, indent=2) + "\n"
    )
    return sidecar


def read_report(csv_path) -> ExperimentReport:
    """Read back a report written by :func:`write_report` (from the sidecar)."""
    sidecar = Path(csv_path).with_suffix(".json")
    data = json.loads(sidecar.read_text())
    return ExperimentReport(config=data["config"], rows=data["rows"])
