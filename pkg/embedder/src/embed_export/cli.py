"""Command-line entry point for the embedding exporter."""

from __future__ import annotations

import json
import sys

import click

from .export import ExportJob, JobError, Pooling, export_embeddings


@click.command()
@click.option("--input", "input_paths", required=True, multiple=True,
              type=click.Path(exists=True), help="Document shard (JSONL or JSONL gzip), repeatable.")
@click.option("--encoder", "encoder_id", required=True,
              help="Pretrained model id, or stub:<dim> for the offline stub.")
@click.option("--pooling", type=click.Choice([p.value for p in Pooling]), default=Pooling.MEAN.value)
@click.option("--batch-size", default=32, type=int)
@click.option("--seed", default=0, type=int, help="Stub encoder seed.")
@click.option("--out", "output_path", required=True, type=click.Path())
def main(input_paths, encoder_id, pooling, batch_size, seed, output_path):
    """Embed every document in the input shards into one EMBV1 file."""
    try:
        job = ExportJob(
            input_paths=list(input_paths),
            encoder_id=encoder_id,
            output_path=output_path,
            pooling=Pooling(pooling),
            batch_size=batch_size,
            seed=seed,
        )
        meta = export_embeddings(job)
    except (ValueError, JobError) as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(meta, sort_keys=True))


if __name__ == "__main__":
    sys.exit(main())
