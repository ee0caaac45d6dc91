"""Command-line interface for the corpus pipeline and its standalone tools."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import contamination as contamination_mod
from . import npm as npm_mod
from . import pipeline as pipeline_mod


@click.group()
def main():
    """Corpus curation pipeline: ingest, extract, dedup, filter, score and report."""


def _load_config(config_path: str) -> pipeline_mod.PipelineConfig:
    try:
        return pipeline_mod.validate_config(config_path)
    except pipeline_mod.ConfigError as exc:
        raise click.ClickException(str(exc))


def _run_stages(config_path: str, stages: list[str]) -> None:
    cfg = _load_config(config_path)
    manifest = pipeline_mod.run_pipeline(cfg, stages)
    click.echo(pipeline_mod.stage_report(manifest))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def run(config_path):
    """Run the full pipeline."""
    _run_stages(config_path, list(pipeline_mod.STAGES))


def _stage_command(stage: str, help_text: str):
    @main.command(name=stage, help=help_text)
    @click.option("--config", "config_path", required=True, type=click.Path(exists=True))
    def _cmd(config_path):
        _run_stages(config_path, [stage])

    return _cmd


_stage_command("ingest", "Read WARC archives and emit raw pages.")
_stage_command("extract", "Convert pages to plain-text documents.")
_stage_command("dedup", "Remove near-duplicate documents within each crawl.")
_stage_command("filter", "Apply the heuristic rule filters.")
_stage_command("score", "Attach quality scores from trained regressors.")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
def stats(manifest_path):
    """Print the per-stage accounting table for a finished run."""
    manifest = pipeline_mod.load_manifest(manifest_path)
    click.echo(pipeline_mod.stage_report(manifest))


@main.command(name="eval-npm")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--tasks", "tasks_path", default=None, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")
def eval_npm(results_path, tasks_path, as_json):
    """Aggregate benchmark task scores into the normalized preferred metric."""
    tasks = npm_mod.load_task_table(tasks_path)
    try:
        results = npm_mod.load_results(results_path, tasks)
        report = npm_mod.npm(results)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(report.to_json() if as_json else report.to_table())


@main.command()
@click.option("--corpus", "corpus_paths", required=True, multiple=True,
              type=click.Path(exists=True), help="Document shard (.jsonl.gz), repeatable.")
@click.option("--evals", "evals_path", required=True, type=click.Path(exists=True),
              help="Evaluation examples JSONL: {example_id, task, text}.")
@click.option("--seed", default=0, type=int)
@click.option("--substrings", default=contamination_mod.DEFAULT_NUM_SUBSTRINGS, type=int)
@click.option("--length", default=contamination_mod.DEFAULT_SUBSTRING_LENGTH, type=int)
@click.option("--exact-bytes", is_flag=True, help="Match without whitespace normalization.")
@click.option("--out", "out_path", default=None, type=click.Path())
def contamination(corpus_paths, evals_path, seed, substrings, length, exact_bytes, out_path):
    """Scan training shards for evaluation-example leakage."""
    examples = []
    with open(evals_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                examples.append(json.loads(line))

    def docs():
        for shard in corpus_paths:
            for row in pipeline_mod.read_jsonl_gz(Path(shard)):
                yield row["doc_id"], row["text"]

    report = contamination_mod.scan_corpus(
        docs(), examples, n=substrings, length=length, seed=seed, normalize=not exact_bytes
    )
    payload = report.to_json()
    if out_path:
        Path(out_path).write_text(payload, encoding="utf-8")
    click.echo(payload)


if __name__ == "__main__":
    sys.exit(main())
