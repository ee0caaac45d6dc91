"""Batch export of document embeddings to EMBV1 files."""

from __future__ import annotations

import gzip
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

from .emb_format import write_embv1
from .encoders import EncoderError, make_encoder


class Pooling(Enum):
    CLS = "cls"
    MEAN = "mean"


class JobError(RuntimeError):
    pass


@dataclass
class ExportJob:
    input_paths: list[Path]
    encoder_id: str
    output_path: Path
    pooling: Pooling = Pooling.MEAN
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        self.input_paths = [Path(p) for p in self.input_paths]
        self.output_path = Path(self.output_path)
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if not self.input_paths:
            raise ValueError("export job has no input shards")


def _read_docs(path: Path) -> Iterator[tuple[str, str]]:
    """(doc_id, text) pairs from a JSONL shard, gzipped or plain."""
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        with opener(path, "rt", encoding="utf-8") as fh:
            for offset, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    yield row["doc_id"], row["text"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise JobError(f"{path}: bad document at line {offset + 1}: {exc}") from exc
    except (OSError, EOFError) as exc:
        raise JobError(f"{path}: unreadable or truncated shard: {exc}") from exc


def export_embeddings(job: ExportJob) -> dict:
    """Encode every document across the job's shards into one EMBV1 file.

    The file appears atomically (written to a temp name, then renamed) and a
    JSON sidecar records the encoder, pooling and truncation settings.
    """
    try:
        encoder = make_encoder(job.encoder_id, seed=job.seed)
    except EncoderError as exc:
        raise JobError(str(exc)) from exc

    def vectors() -> Iterator[tuple[str, "object"]]:
        batch_ids: list[str] = []
        batch_texts: list[str] = []

        def flush():
            encoded = encoder.encode(batch_texts, pooling=job.pooling.value)
            yield from zip(batch_ids, encoded)
            batch_ids.clear()
            batch_texts.clear()

        for path in job.input_paths:
            for doc_id, text in _read_docs(path):
                batch_ids.append(doc_id)
                batch_texts.append(text)
                if len(batch_ids) == job.batch_size:
                    yield from flush()
        if batch_ids:
            yield from flush()

    tmp_path = job.output_path.with_name(job.output_path.name + ".tmp")
    tmp_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(tmp_path, "wb") as fh:
            count = write_embv1(fh, encoder.dim, vectors())
        if count == 0:
            raise JobError(f"no documents found in {[str(p) for p in job.input_paths]}")
    except Exception:
        tmp_path.unlink(missing_ok=True)
        raise
    os.replace(tmp_path, job.output_path)

    meta = {
        "encoder": job.encoder_id,
        "pooling": job.pooling.value,
        "dim": encoder.dim,
        "count": count,
        "max_length": encoder.max_length,
        "truncation": "inputs longer than max_length are truncated" if encoder.max_length else "none",
    }
    meta_path = job.output_path.with_name(job.output_path.name + ".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    return meta
