"""Command-line entry point.

Subcommands cover the full workflow: generate models and corpora, run the
detector (optionally sharded), certify the simplicial conditions, query the
exact oracle, build adversarial model pairs, and drive experiment/timing
sweeps.  Options may come from a TOML file (one table per subcommand, keys
named like the flags) with command-line flags taking precedence.

Exit codes: 0 on success, 2 for validation problems (bad inputs, malformed
files, precondition violations), 3 for numerical failures, 4 when the
detector cannot recover all K words.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .conditions import is_diag_dominant, is_full_rank, is_simplicial
from .detect import DetectorConfig, detect_novel_words
from .dist import run_distributed_detection
from .errors import (
    DegenerateGeometry,
    DegeneratePrior,
    DegenerateWord,
    IncompleteRecovery,
    NotSeparable,
    NotSimplicial,
    ProtocolError,
    ScaleTooLarge,
    ShardMissing,
    SimplicialPrior,
    SolverFailure,
    VersionMismatch,
)
from .experiment import ExperimentSpec, run_experiment, timing_scaling, write_report
from .model import load_model, novel_words_of, save_model
from .oracle import oracle_novel_words
from .synth import (
    adversarial_pair,
    dependent_topic_prior,
    random_separable_model,
    read_corpus,
    sample_corpus,
    sample_theta,
    write_corpus,
)

_VALIDATION_ERRORS = (
    ValueError,
    OSError,
    NotSeparable,
    DegeneratePrior,
    DegenerateWord,
    ScaleTooLarge,
    SimplicialPrior,
    NotSimplicial,
    ProtocolError,
    ShardMissing,
    VersionMismatch,
)
_NUMERICAL_ERRORS = (SolverFailure, DegenerateGeometry)


def _fail(err: BaseException, code: int) -> None:
    click.echo(f"error: {err}", err=True)
    sys.exit(code)


def _guarded(fn):
    """Translate domain errors into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except IncompleteRecovery as err:
            _fail(err, 4)
        except _NUMERICAL_ERRORS as err:
            _fail(err, 3)
        except _VALIDATION_ERRORS as err:
            _fail(err, 2)

    return wrapper


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise click.UsageError("expected at least one integer")
    return values


_file_in = click.Path(exists=True, dir_okay=False)
_file_out = click.Path(dir_okay=False)


@click.group()
@click.option(
    "--config",
    type=_file_in,
    default=None,
    help="TOML file with per-subcommand option defaults; flags override.",
)
@click.pass_context
@_guarded
def main(ctx, config):
    """Novel-word detection for separable topic models."""
    if config is not None:
        with open(config, "rb") as fh:
            ctx.default_map = tomllib.load(fh)


@main.command()
@click.option("--w", type=int, required=True, help="vocabulary size")
@click.option("--k", type=int, required=True, help="number of topics")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model-out", type=_file_out, required=True)
@click.option("--corpus-out", type=_file_out)
@click.option("--m", type=int, help="documents to sample (with --corpus-out)")
@click.option("--n", type=int, help="tokens per document (with --corpus-out)")
@_guarded
def generate(w, k, seed, model_out, corpus_out, m, n):
    """Draw a random separable model, optionally with a sampled corpus."""
    config = {
        "command": "generate",
        "w": w,
        "k": k,
        "seed": seed,
        "model_out": model_out,
        "corpus_out": corpus_out,
        "m": m,
        "n": n,
    }
    beta, prior = random_separable_model(w, k, seed=seed)
    save_model(beta, prior, model_out, config=config)
    summary = {
        "model": model_out,
        "groups": [sorted(g) for g in novel_words_of(beta).groups],
    }
    if corpus_out is not None:
        if m is None or n is None:
            raise click.UsageError("--corpus-out requires --m and --n")
        theta = sample_theta(prior, m, seed=seed)
        corpus = sample_corpus(beta, theta, n, seed=seed)
        write_corpus(corpus, corpus_out)
        meta = Path(f"{corpus_out}.meta.json")
        meta.write_text(json.dumps({"config": config}, indent=2) + "\n")
        summary["corpus"] = corpus_out
    click.echo(json.dumps(summary))


def _detect_csv(payload: dict) -> str:
    chosen = set(payload["selected"])
    lines = ["word,phat,selected"]
    for i, value in enumerate(payload["phat"]):
        lines.append(f"{i},{value},{int(i in chosen)}")
    return "\n".join(lines) + "\n"


@main.command()
@click.option("--corpus", type=_file_in, required=True)
@click.option("--k", type=int, required=True, help="number of topics to recover")
@click.option("--p", type=int, default=500, show_default=True, help="projection count")
@click.option("--d", type=float, default=None, help="separation scale; estimated when omitted")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--shards", type=int, default=1, show_default=True)
@click.option("--light", is_flag=True, help="bandwidth-light shard protocol (needs --shards > 1)")
@click.option(
    "--output",
    type=click.Choice(["json", "csv"]),
    default="json",
    show_default=True,
)
@click.option("--out", type=_file_out, help="also write the report to this file")
@_guarded
def detect(corpus, k, p, d, seed, shards, light, output, out):
    """Run the random-projection detector on a bag-of-words corpus."""
    if light and shards < 2:
        raise click.UsageError("--light requires --shards > 1")
    data = read_corpus(corpus)
    config = DetectorConfig(n_topics=k, n_projections=p, gram_gap=d, seed=seed)
    if shards > 1:
        result = run_distributed_detection(
            data, config, shards, mode="light" if light else "faithful"
        ).result
    else:
        result = detect_novel_words(
            data, n_topics=k, n_projections=p, gram_gap=d, seed=seed
        )
    timing = result.diagnostics.get("timing_ms", {})
    payload = {
        "selected": result.selected,
        "phat": [float(v) for v in result.phat],
        "d_used": float(result.diagnostics["gram_gap"]),
        "seed": seed,
        "timing_ms": {
            stage: round(timing.get(stage, 0.0), 3)
            for stage in ("split", "cooc", "project", "select")
        },
    }
    rendered = json.dumps(payload) if output == "json" else _detect_csv(payload)
    click.echo(rendered, nl=output == "json")
    if out is not None:
        resolved = {
            "command": "detect",
            "corpus": corpus,
            "k": k,
            "p": p,
            "d": d,
            "seed": seed,
            "shards": shards,
            "light": light,
            "output": output,
        }
        if output == "json":
            text = json.dumps({"config": resolved, **payload}, indent=2) + "\n"
        else:
            text = f"# config = {json.dumps(resolved, sort_keys=True)}\n" + rendered
        Path(out).write_text(text)


@main.command()
@click.option("--matrix", type=_file_in, help="dense CSV matrix to test")
@click.option("--model", type=_file_in, help="model file; tests the prior's normalized second moment")
@click.option("--tol", type=float, default=1e-9, show_default=True)
@_guarded
def check(matrix, model, tol):
    """Certify simplicial / diagonal-dominance / full-rank conditions."""
    if (matrix is None) == (model is None):
        raise click.UsageError("pass exactly one of --matrix or --model")
    if matrix is not None:
        entries = np.loadtxt(matrix, delimiter=",", ndmin=2)
    else:
        _, prior = load_model(model)
        entries = prior.normalized_second_moment
    report = is_simplicial(entries, tol=tol)
    square = entries.shape[0] == entries.shape[1]
    payload = {
        "simplicial": report.is_simplicial,
        "gamma": report.gamma_hat if np.isfinite(report.gamma_hat) else None,
        "diag_dominant": is_diag_dominant(entries) if square else None,
        "full_rank": is_full_rank(entries) if square else None,
        "violating_row": report.violating_row,
    }
    click.echo(json.dumps(payload))


@main.command()
@click.option("--model", type=_file_in, required=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@_guarded
def oracle(model, tol):
    """Exact extreme-row oracle: the novel-word groups of a model."""
    beta, prior = load_model(model)
    groups = oracle_novel_words(beta, prior, tol=tol)
    click.echo(json.dumps({"groups": [sorted(g) for g in groups.groups]}))


@main.command()
@click.option("--k", type=int, required=True, help="number of topics (at least 2)")
@click.option("--w", type=int, default=12, show_default=True, help="total vocabulary size")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--b", type=float, default=0.2, show_default=True, help="scale of the swapped rows")
@click.option("--alpha", type=float, default=0.5, show_default=True, help="mixing weight in (0, 1)")
@click.option("--out-prefix", required=True, type=click.Path())
@_guarded
def adversarial(k, w, seed, b, alpha, out_prefix):
    """Two observationally equivalent models that disagree on word 0.

    Draws a dependence-degenerate prior from the seed and writes
    <prefix>_beta1.json and <prefix>_beta2.json sharing that prior.
    """
    config = {
        "command": "adversarial",
        "k": k,
        "w": w,
        "seed": seed,
        "b": b,
        "alpha": alpha,
        "out_prefix": out_prefix,
    }
    prior = dependent_topic_prior(k, seed=seed)
    filler, _ = random_separable_model(w - 2, k, seed=seed)
    pair = adversarial_pair(prior, filler, b=b, alpha=alpha)
    paths = (f"{out_prefix}_beta1.json", f"{out_prefix}_beta2.json")
    save_model(pair.beta1, pair.prior, paths[0], config=config)
    save_model(pair.beta2, pair.prior, paths[1], config=config)
    click.echo(
        json.dumps(
            {
                "beta1": paths[0],
                "beta2": paths[1],
                "certificate": [float(x) for x in pair.certificate],
                "b": b,
                "alpha": alpha,
            }
        )
    )


@main.command()
@click.option("--w", type=int, default=30, show_default=True)
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--n", type=int, default=200, show_default=True, help="tokens per document")
@click.option("--p", type=int, default=500, show_default=True)
@click.option("--m-ladder", default="100,1000,10000", show_default=True, help="comma-separated document counts")
@click.option("--trials", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model-seed", type=int, default=0, show_default=True)
@click.option("--d", type=float, default=None)
@click.option("--model", type=_file_in, help="use this model file instead of generating one")
@click.option("--shards", type=int, default=1, show_default=True)
@click.option("--light", is_flag=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=_file_out, required=True)
@_guarded
def experiment(
    w, k, n, p, m_ladder, trials, seed, model_seed, d,
    model, shards, light, workers, out,
):
    """Success-rate ladder over corpus sizes; writes CSV + JSON sidecar."""
    spec = ExperimentSpec(
        n_words=w,
        n_topics=k,
        doc_length=n,
        n_projections=p,
        m_ladder=tuple(_int_list(m_ladder)),
        trials=trials,
        seed=seed,
        model_seed=model_seed,
        gram_gap=d,
        n_shards=shards,
        light=light,
        workers=workers,
    )
    beta = prior = None
    if model is not None:
        beta, prior = load_model(model)
    report = run_experiment(spec, beta=beta, prior=prior)
    sidecar = write_report(report, out)
    click.echo(
        json.dumps(
            {
                "csv": str(out),
                "json": str(sidecar),
                "success_rates": {str(r["m"]): r["success_rate"] for r in report.rows},
            }
        )
    )


@main.command()
@click.option("--axis", type=click.Choice(["m", "p", "w"]), required=True)
@click.option("--values", required=True, help="comma-separated axis values")
@click.option("--repeats", type=int, default=3, show_default=True)
@click.option("--w", type=int, default=30, show_default=True)
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--n", type=int, default=100, show_default=True, help="tokens per document")
@click.option("--p", type=int, default=500, show_default=True)
@click.option("--base-m", type=int, default=2000, show_default=True, help="document count when the axis is not m")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model-seed", type=int, default=0, show_default=True)
@click.option("--out", type=_file_out)
@_guarded
def timing(axis, values, repeats, w, k, n, p, base_m, seed, model_seed, out):
    """Stage wall-times along one scaling axis, with consecutive ratios."""
    spec = ExperimentSpec(
        n_words=w,
        n_topics=k,
        doc_length=n,
        n_projections=p,
        m_ladder=(base_m,),
        trials=1,
        seed=seed,
        model_seed=model_seed,
    )
    report = timing_scaling(spec, axis, _int_list(values), repeats=repeats)
    if out is not None:
        write_report(report, out)
    click.echo(json.dumps({"rows": report.rows}))


if __name__ == "__main__":
    main()
