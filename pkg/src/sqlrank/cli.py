"""Command-line pipeline: generate -> label -> balance -> select -> evaluate.

Exit codes: 0 success, 2 config error, 3 missing upstream artifact,
4 runtime failure.
"""
from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from .config import ConfigError, RunConfig
from .generation import (
    GenerationConfig,
    extract_sql,
    load_pools,
    render_generation_prompt,
    sample_candidates,
)
from .labeling import balance_dataset, dataset_stats, load_dataset, save_dataset
from .metrics import (
    Strategy,
    build_evals,
    evaluate_question,
    execution_accuracy,
    n_sweep,
    pass_at_n,
    stratify_by_difficulty,
    sweep_to_csv,
)
from .pipeline import (
    MissingArtifactError,
    build_binding,
    build_records,
    dataset_examples,
    load_corpus,
    require_artifact,
    run_labeling,
    save_label_trace,
)
from .scoring import PromptVariant

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_RUNTIME = 4


def _config_options(fn):
    @click.option("--config", "config_path", type=click.Path(exists=False), default=None,
                  help="YAML/JSON config file; flags override it.")
    @click.option("--dataset-root", default=None)
    @click.option("--split", default=None)
    @click.option("--n-candidates", "-n", type=int, default=None)
    @click.option("--temperature", type=float, default=None)
    @click.option("--exec-timeout-secs", type=float, default=None)
    @click.option("--seed", type=int, default=None)
    @click.option("--scorer", default=None,
                  help="oracle | mockhash[:seed] | remote:<url>")
    @click.option("--prompt-variant", default=None,
                  type=click.Choice([v.value for v in PromptVariant]))
    @click.option("--output-dir", "-o", default=None)
    @click.option("--endpoint-url", default=None)
    @click.option("--model-name", default=None)
    @click.option("--maj-include-errors", is_flag=True, default=None)
    @click.option("--prefilter-executable", is_flag=True, default=None)
    @functools.wraps(fn)
    def wrapper(config_path, **kwargs):
        override_keys = [
            "dataset_root", "split", "n_candidates", "temperature",
            "exec_timeout_secs", "seed", "scorer", "prompt_variant",
            "output_dir", "endpoint_url", "model_name",
            "maj_include_errors", "prefilter_executable",
        ]
        overrides = {k: kwargs.pop(k) for k in override_keys}
        try:
            config = RunConfig.load(config_path, overrides)
        except (ConfigError, FileNotFoundError, OSError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        try:
            fn(config, **kwargs)
        except MissingArtifactError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_MISSING_ARTIFACT)
        except Exception as exc:  # runtime failures get a distinct code
            log.debug("runtime failure", exc_info=True)
            click.echo(f"runtime failure: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)
    return wrapper


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _out(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _pools_path(config: RunConfig) -> Path:
    return Path(config.output_dir) / "pools.jsonl"


def _labels_path(config: RunConfig) -> Path:
    return Path(config.output_dir) / "labels.jsonl"


def _dataset_path(config: RunConfig) -> Path:
    return Path(config.output_dir) / "dataset.jsonl"


@main.command()
@_config_options
def generate(config: RunConfig) -> None:
    """Sample candidate pools from the completion endpoint (resumable)."""
    corpus = load_corpus(config)
    out = _out(config)
    pools_path = _pools_path(config)
    done: set[str] = set()
    if pools_path.exists():
        done = {p.question_id for p in load_pools(pools_path)}
        if done:
            click.echo(f"resuming: {len(done)} pools already present")
    gen_config = GenerationConfig(
        n_candidates=config.n_candidates,
        temperature=config.temperature,
        max_tokens=config.max_tokens,
        endpoint_url=config.endpoint_url,
        model_name=config.model_name,
        seed=config.seed,
        max_in_flight=config.max_in_flight,
    )
    meta = dict(gen_config.meta(), run_config=config.snapshot())
    with pools_path.open("a", encoding="utf-8") as fh:
        for question in corpus.questions:
            if question.id in done:
                continue
            prompt = render_generation_prompt(
                corpus.schemas[question.db_id], question
            )
            completions = sample_candidates(prompt, gen_config)
            for i, raw in enumerate(completions):
                fh.write(json.dumps({
                    "question_id": question.id,
                    "index": i,
                    "raw_completion": raw,
                    "sql": extract_sql(raw),
                    "generator_meta": meta,
                }, sort_keys=True) + "\n")
            fh.flush()
    click.echo(f"pools written to {pools_path}")


@main.command()
@_config_options
def label(config: RunConfig) -> None:
    """Label candidates by execution equivalence; emit dataset + label trace."""
    corpus = load_corpus(config)
    pools = load_pools(require_artifact(_pools_path(config), "sqlrank generate"))
    labeled, gold_failures = run_labeling(config, corpus, pools)
    out = _out(config)

    header = {
        "run_config": config.snapshot(),
        "gold_failures": [q.id for q in gold_failures],
    }
    save_label_trace(labeled, _labels_path(config), header)

    variant = PromptVariant(config.prompt_variant)
    examples = dataset_examples(labeled, corpus, variant)
    stats = dataset_stats(examples)
    save_dataset(examples, _dataset_path(config), header=header)
    click.echo(
        f"labeled {stats.n_questions} questions -> {stats.n_examples} examples "
        f"({stats.pct_incorrect:.2f}% incorrect / {stats.pct_correct:.2f}% correct)"
    )
    if gold_failures:
        click.echo(f"excluded {len(gold_failures)} questions with failing gold SQL")


@main.command()
@_config_options
def balance(config: RunConfig) -> None:
    """Downsample the labeled dataset to a per-question 50/50 class split."""
    examples, header = load_dataset(
        require_artifact(_dataset_path(config), "sqlrank label")
    )
    balanced = balance_dataset(examples)
    stats = dataset_stats(balanced)
    path = Path(config.output_dir) / "dataset_balanced.jsonl"
    save_dataset(balanced, path, header=header)
    click.echo(
        f"balanced dataset: {stats.n_examples} examples "
        f"({stats.n_correct} Yes / {stats.n_incorrect} No) -> {path}"
    )


def _load_records(config: RunConfig):
    corpus = load_corpus(config)
    pools = load_pools(require_artifact(_pools_path(config), "sqlrank generate"))
    labeled, _ = run_labeling(config, corpus, pools)
    labels_path = _labels_path(config)
    binding = build_binding(
        config, labels_path if labels_path.exists() else None
    )
    return build_records(config, corpus, labeled, binding)


@main.command()
@_config_options
def select(config: RunConfig) -> None:
    """Run the configured selection strategies; emit per-question traces."""
    records = _load_records(config)
    strategies = [Strategy(s) for s in config.strategies]
    path = _out(config) / "selections.jsonl"
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(
            {"__header__": {"run_config": config.snapshot()}}, sort_keys=True
        ) + "\n")
        for record in records:
            n = len(record.pool.candidates)
            _, selections = evaluate_question(
                record, n, config.seed, strategies, config.maj_include_errors
            )
            for strategy in strategies:
                result = selections[strategy.value]
                fh.write(json.dumps({
                    "question_id": record.question_id,
                    "strategy": result.strategy.value,
                    "chosen_index": result.chosen_index,
                    "evidence": result.evidence,
                    "rng_seed_used": result.rng_seed_used,
                }, sort_keys=True) + "\n")
    click.echo(f"selections written to {path}")


def _render_report(report: dict) -> str:
    lines = [
        f"dataset: {report['dataset']}  split: {report['split']}  "
        f"N: {report['n']}  questions: {report['n_questions']}",
        "",
        f"{'strategy':<16} {'EX':>8} {'Pass@N':>8}",
    ]
    for name, ex in sorted(report["ex_by_strategy"].items()):
        lines.append(f"{name:<16} {ex:>8.2f} {report['pass_at_n']:>8.2f}")
    lines.append("")
    lines.append("EX by difficulty:")
    strata_order = ["Simple", "Moderate", "Challenging", "Unknown", "Total"]
    for name, strata in sorted(report["ex_by_difficulty"].items()):
        parts = "  ".join(
            f"{k}={strata[k]:.2f}" for k in strata_order if k in strata
        )
        lines.append(f"  {name:<14} {parts}")
    if report["gold_failures"]:
        lines.append("")
        lines.append(
            "questions excluded (gold SQL failed): "
            + ", ".join(report["gold_failures"])
        )
    return "\n".join(lines) + "\n"


@main.command()
@_config_options
def evaluate(config: RunConfig) -> None:
    """Compute EX for every strategy plus Pass@N; write report artifacts."""
    corpus = load_corpus(config)
    pools = load_pools(require_artifact(_pools_path(config), "sqlrank generate"))
    labeled, gold_failures = run_labeling(config, corpus, pools)
    labels_path = _labels_path(config)
    binding = build_binding(config, labels_path if labels_path.exists() else None)
    records = build_records(config, corpus, labeled, binding)
    strategies = [Strategy(s) for s in config.strategies]

    n = min(len(r.pool.candidates) for r in records)
    evals = build_evals(records, n, config.seed, strategies,
                        config.maj_include_errors)
    report = {
        "dataset": config.dataset_root,
        "split": config.split,
        "n": n,
        "n_questions": len(evals),
        "ex_by_strategy": {
            s.value: execution_accuracy(evals, s) for s in strategies
        },
        "pass_at_n": pass_at_n(evals, n),
        "ex_by_difficulty": {
            s.value: stratify_by_difficulty(evals, s) for s in strategies
        },
        "per_question": [
            {
                "question_id": e.question_id,
                "difficulty": e.difficulty.value,
                "correct_by_strategy": e.correct_by_strategy,
                "pass_bits": list(e.pass_bits),
            }
            for e in evals
        ],
        "gold_failures": [q.id for q in gold_failures],
        "run_config": config.snapshot(),
    }
    out = _out(config)
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    text = _render_report(report)
    (out / "report.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


@main.command()
@_config_options
@click.option("--n-values", default=None,
              help="Comma-separated n values; default 1..N.")
def sweep(config: RunConfig, n_values: str | None) -> None:
    """Evaluate every strategy across candidate-prefix sizes; write CSV."""
    records = _load_records(config)
    max_n = min(len(r.pool.candidates) for r in records)
    values = (
        [int(v) for v in n_values.split(",")]
        if n_values else list(range(1, max_n + 1))
    )
    strategies = [Strategy(s) for s in config.strategies]
    rows = n_sweep(records, values, config.seed, strategies,
                   config.maj_include_errors)
    csv_text = (
        f"# run_config: {config.snapshot_json()}\n" + sweep_to_csv(rows)
    )
    path = _out(config) / "sweep.csv"
    path.write_text(csv_text, encoding="utf-8")
    click.echo(f"sweep written to {path}")


@main.command()
@_config_options
def report(config: RunConfig) -> None:
    """Re-render the human-readable report from report.json."""
    path = require_artifact(
        Path(config.output_dir) / "report.json", "sqlrank evaluate"
    )
    report_data = json.loads(path.read_text(encoding="utf-8"))
    click.echo(_render_report(report_data), nl=False)
