"""End-to-end pipeline: ingest -> extract -> dedup -> filter -> score.

Each stage reads the previous stage's JSONL shards from the output
directory, emits its own generation directory, and contributes one row to
the manifest's stage accounting. Runs are deterministic for a fixed
(config, seed): shards are gzip-compressed with a zeroed mtime and the
manifest carries no timestamps.
"""

from __future__ import annotations

import gzip
import hashlib
import json
import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

import yaml

from . import dedup as dedup_mod
from . import filters as filters_mod
from . import quality as quality_mod
from .extraction import ExtractionMode, ExtractionParams, extract
from .text import word_count
from .warc import PageSkip, RecordType, read_warc_records, select_language, to_raw_page

STAGES = ("ingest", "extract", "dedup", "filter", "score")

WORKERS_ENV_VAR = "CORPUSFORGE_WORKERS"


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

_DEFAULTS: dict = {
    "seed": 0,
    "target_language": "pt",
    "output_dir": "output",
    "crawls": [],
    "extraction": {
        "mode": "content",
        "max_link_density": 0.5,
        "min_block_words": 5,
    },
    "dedup": {
        "enabled": True,
        "k": 5,
        "num_perms": 128,
        "bands": 16,
        "rows": 8,
        "threshold": 0.8,
    },
    "filters": {
        "ruleset": "both",
        "stopword_file": None,
        "restricted_file": None,
    },
    "scoring": {
        "enabled": False,
        "categories": ["edu", "stem", "toxic"],
        "embeddings": None,
        "models": {},
        "score_threshold": 3,
    },
    "tokenizer": {
        "kind": "words",
        "vocab_file": None,
    },
}


@dataclass
class PipelineConfig:
    seed: int
    target_language: str
    output_dir: Path
    crawls: list[dict]
    extraction: dict
    dedup: dict
    filters: dict
    scoring: dict
    tokenizer: dict
    base_dir: Path = field(default_factory=Path)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "target_language": self.target_language,
            "output_dir": str(self.output_dir),
            "crawls": self.crawls,
            "extraction": self.extraction,
            "dedup": self.dedup,
            "filters": self.filters,
            "scoring": self.scoring,
            "tokenizer": self.tokenizer,
        }


def _merge_section(name: str, user: dict, defaults: dict) -> dict:
    unknown = set(user) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in '{name}' section: {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(user)
    return merged


def validate_config(path) -> PipelineConfig:
    """Parse, check invariants and echo back a fully defaulted config."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")

    base_dir = path.parent.resolve()
    cfg = PipelineConfig(
        seed=int(raw.get("seed", _DEFAULTS["seed"])),
        target_language=str(raw.get("target_language", _DEFAULTS["target_language"])),
        output_dir=Path(raw.get("output_dir", _DEFAULTS["output_dir"])),
        crawls=list(raw.get("crawls", [])),
        extraction=_merge_section("extraction", raw.get("extraction", {}), _DEFAULTS["extraction"]),
        dedup=_merge_section("dedup", raw.get("dedup", {}), _DEFAULTS["dedup"]),
        filters=_merge_section("filters", raw.get("filters", {}), _DEFAULTS["filters"]),
        scoring=_merge_section("scoring", raw.get("scoring", {}), _DEFAULTS["scoring"]),
        tokenizer=_merge_section("tokenizer", raw.get("tokenizer", {}), _DEFAULTS["tokenizer"]),
        base_dir=base_dir,
    )
    if not cfg.output_dir.is_absolute():
        cfg.output_dir = base_dir / cfg.output_dir

    if not cfg.crawls:
        raise ConfigError("config lists no crawls")
    for crawl in cfg.crawls:
        unknown = set(crawl) - {"crawl_id", "warc_paths"}
        if unknown:
            raise ConfigError(f"unknown keys in crawl entry: {sorted(unknown)}")
        if not crawl.get("crawl_id"):
            raise ConfigError("crawl entry missing crawl_id")
        paths = crawl.get("warc_paths") or []
        if not paths:
            raise ConfigError(f"crawl {crawl['crawl_id']}: no warc_paths")
        for p in paths:
            resolved = Path(p) if Path(p).is_absolute() else base_dir / p
            if not resolved.exists():
                raise ConfigError(f"crawl {crawl['crawl_id']}: input path {resolved} does not exist")

    if cfg.extraction["mode"] not in ("naive", "content"):
        raise ConfigError(f"extraction.mode must be naive or content, got {cfg.extraction['mode']!r}")
    # Fails early on inconsistent band/row/perm combinations.
    dedup_mod.DedupParams(
        k=cfg.dedup["k"],
        num_perms=cfg.dedup["num_perms"],
        seed=cfg.seed,
        bands=cfg.dedup["bands"],
        rows=cfg.dedup["rows"],
        threshold=cfg.dedup["threshold"],
    )
    if cfg.filters["ruleset"] not in filters_mod.RULESETS:
        raise ConfigError(f"filters.ruleset must be one of {filters_mod.RULESETS}")
    if cfg.scoring["enabled"]:
        for category in cfg.scoring["categories"]:
            if category not in quality_mod.CATEGORIES:
                raise ConfigError(f"unknown scoring category {category!r}")
            if category not in cfg.scoring["models"]:
                raise ConfigError(f"scoring enabled but no model file for {category!r}")
        if not cfg.scoring["embeddings"]:
            raise ConfigError("scoring enabled but no embeddings file configured")
    return cfg


# ---------------------------------------------------------------------------
# Shard IO
# ---------------------------------------------------------------------------


def write_jsonl_gz(path: Path, rows: Iterable[dict]) -> int:
    """Write one JSON object per line; gzip mtime pinned to 0 for determinism."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "wb") as raw:
        # filename="" keeps the gzip header free of the output path, so
        # identical rows produce identical bytes wherever they are written.
        with gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as gz:
            for row in rows:
                gz.write(json.dumps(row, ensure_ascii=False, sort_keys=True).encode("utf-8"))
                gz.write(b"\n")
                count += 1
    return count


def read_jsonl_gz(path: Path) -> Iterator[dict]:
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Token counting
# ---------------------------------------------------------------------------


def make_token_counter(tokenizer_cfg: dict, base_dir: Path) -> Callable[[str], int]:
    """Default counter is word based; a vocabulary file switches to greedy
    longest-match subword counting."""
    kind = tokenizer_cfg.get("kind", "words")
    if kind == "words":
        return word_count
    if kind == "vocab":
        vocab_file = tokenizer_cfg.get("vocab_file")
        if not vocab_file:
            raise ConfigError("tokenizer.kind=vocab requires tokenizer.vocab_file")
        vocab_path = Path(vocab_file)
        if not vocab_path.is_absolute():
            vocab_path = base_dir / vocab_path
        with open(vocab_path, encoding="utf-8") as fh:
            vocab = {line.rstrip("\n") for line in fh if line.rstrip("\n")}
        max_len = max(len(v) for v in vocab)

        def count_subwords(text: str) -> int:
            total = 0
            for chunk in text.split():
                i = 0
                while i < len(chunk):
                    for size in range(min(max_len, len(chunk) - i), 0, -1):
                        if chunk[i : i + size] in vocab:
                            i += size
                            break
                    else:
                        i += 1  # unknown character counts as one token
                    total += 1
            return total

        return count_subwords
    raise ConfigError(f"unknown tokenizer kind {tokenizer_cfg.get('kind')!r}")


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


@dataclass
class StageStats:
    stage: str
    docs_in: int
    docs_out: int
    words_in: int
    words_out: int

    @property
    def removal_fraction(self) -> float:
        return 1.0 - self.docs_out / self.docs_in if self.docs_in else 0.0

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "docs_in": self.docs_in,
            "docs_out": self.docs_out,
            "words_in": self.words_in,
            "words_out": self.words_out,
            "removal_fraction": self.removal_fraction,
        }


def _resolve(path, base_dir: Path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base_dir / p


def stage_ingest(cfg: PipelineConfig, out_dir: Path) -> StageStats:
    records_seen = 0
    pages_out = 0
    for crawl in cfg.crawls:
        crawl_id = crawl["crawl_id"]

        def pages() -> Iterator[dict]:
            nonlocal records_seen, pages_out
            seq = 0
            for warc_path in crawl["warc_paths"]:
                with open(_resolve(warc_path, cfg.base_dir), "rb") as fh:
                    for record in read_warc_records(fh):
                        records_seen += 1
                        if record.record_type is not RecordType.RESPONSE:
                            continue
                        if not select_language(record, cfg.target_language):
                            continue
                        try:
                            page = to_raw_page(record, crawl_id)
                        except PageSkip:
                            continue
                        row = {
                            "doc_id": f"{crawl_id}-{seq:08d}",
                            "url": page.url,
                            "crawl_id": crawl_id,
                            "html": page.html,
                            "languages": page.languages,
                        }
                        seq += 1
                        pages_out += 1
                        yield row

        write_jsonl_gz(out_dir / f"{crawl_id}.pages.jsonl.gz", pages())
    return StageStats("ingest", records_seen, pages_out, 0, 0)


def stage_extract(cfg: PipelineConfig, in_dir: Path, out_dir: Path, count_tokens) -> StageStats:
    params = ExtractionParams(
        mode=ExtractionMode(cfg.extraction["mode"]),
        max_link_density=cfg.extraction["max_link_density"],
        min_block_words=cfg.extraction["min_block_words"],
    )
    docs_in = docs_out = words_out = 0

    class _PageProxy:
        __slots__ = ("html",)

        def __init__(self, html):
            self.html = html

    workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    for shard in sorted(in_dir.glob("*.pages.jsonl.gz")):
        crawl_id = shard.name.split(".")[0]

        def docs() -> Iterator[dict]:
            nonlocal docs_in, docs_out, words_out
            rows = read_jsonl_gz(shard)

            def one(row: dict) -> Optional[dict]:
                result = extract(_PageProxy(row["html"]), params)
                if not result.text:
                    return None
                return {
                    "doc_id": row["doc_id"],
                    "url": row["url"],
                    "crawl_id": row["crawl_id"],
                    "text": result.text,
                    "word_count": result.word_count,
                    "char_count": result.char_count,
                    "tokens": count_tokens(result.text),
                    "extraction_mode": params.mode.value,
                }

            # Worker count only affects throughput; imap preserves shard order
            # so output bytes are identical regardless of parallelism.
            if workers > 1:
                import multiprocessing.dummy as mp  # thread pool: extraction is pure Python but cheap to share

                with mp.Pool(workers) as pool:
                    produced = pool.imap(one, rows, chunksize=16)
                    for doc in produced:
                        docs_in += 1
                        if doc is not None:
                            docs_out += 1
                            words_out += doc["word_count"]
                            yield doc
            else:
                for row in rows:
                    docs_in += 1
                    doc = one(row)
                    if doc is not None:
                        docs_out += 1
                        words_out += doc["word_count"]
                        yield doc

        write_jsonl_gz(out_dir / f"{crawl_id}.docs.jsonl.gz", docs())
    return StageStats("extract", docs_in, docs_out, 0, words_out)


def stage_dedup(cfg: PipelineConfig, in_dir: Path, out_dir: Path) -> StageStats:
    docs_in = docs_out = words_in = words_out = 0
    if not cfg.dedup["enabled"]:
        for shard in sorted(in_dir.glob("*.docs.jsonl.gz")):
            rows = list(read_jsonl_gz(shard))
            docs_in += len(rows)
            docs_out += len(rows)
            words_in += sum(r["word_count"] for r in rows)
            words_out = words_in
            write_jsonl_gz(out_dir / shard.name, rows)
        return StageStats("dedup", docs_in, docs_out, words_in, words_out)

    params = dedup_mod.DedupParams(
        k=cfg.dedup["k"],
        num_perms=cfg.dedup["num_perms"],
        seed=cfg.seed,
        bands=cfg.dedup["bands"],
        rows=cfg.dedup["rows"],
        threshold=cfg.dedup["threshold"],
    )
    cluster_rows = []
    # Documents are grouped per crawl shard, so comparisons never cross crawls.
    for shard in sorted(in_dir.glob("*.docs.jsonl.gz")):
        rows = {r["doc_id"]: r for r in read_jsonl_gz(shard)}
        docs_in += len(rows)
        words_in += sum(r["word_count"] for r in rows.values())
        kept_ids, clusters = dedup_mod.dedup_crawl(
            ((doc_id, row["text"]) for doc_id, row in rows.items()), params
        )
        kept = [rows[i] for i in kept_ids]
        docs_out += len(kept)
        words_out += sum(r["word_count"] for r in kept)
        write_jsonl_gz(out_dir / shard.name, kept)
        for cluster in clusters:
            cluster_rows.append(
                {
                    "crawl_id": shard.name.split(".")[0],
                    "representative_id": cluster.representative_id,
                    "member_ids": cluster.member_ids,
                }
            )
    write_jsonl_gz(out_dir / "clusters.jsonl.gz", cluster_rows)
    return StageStats("dedup", docs_in, docs_out, words_in, words_out)


def stage_filter(cfg: PipelineConfig, in_dir: Path, out_dir: Path) -> StageStats:
    rule_params_kwargs = {}
    if cfg.filters["stopword_file"]:
        rule_params_kwargs["stopword_list"] = filters_mod.load_wordlist_file(
            _resolve(cfg.filters["stopword_file"], cfg.base_dir)
        )
    if cfg.filters["restricted_file"]:
        rule_params_kwargs["restricted_words"] = filters_mod.load_wordlist_file(
            _resolve(cfg.filters["restricted_file"], cfg.base_dir)
        )
    params = filters_mod.RuleParams(**rule_params_kwargs)
    ruleset = cfg.filters["ruleset"]

    docs_in = docs_out = words_in = words_out = 0
    report = filters_mod.FilterReport(ruleset=ruleset)
    for shard in sorted(in_dir.glob("*.docs.jsonl.gz")):

        def kept() -> Iterator[dict]:
            nonlocal docs_in, docs_out, words_in, words_out
            for row in read_jsonl_gz(shard):
                docs_in += 1
                words_in += row["word_count"]
                report.docs_in += 1
                verdict = filters_mod.combined_verdict(row["text"], ruleset, params)
                if verdict.keep:
                    docs_out += 1
                    words_out += row["word_count"]
                    yield row
                else:
                    report.docs_removed += 1
                    for rule in verdict.violated_rules:
                        report.rule_counts[rule] = report.rule_counts.get(rule, 0) + 1

        write_jsonl_gz(out_dir / shard.name, kept())

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "filter_report.json").write_text(report.to_json(), encoding="utf-8")
    return StageStats("filter", docs_in, docs_out, words_in, words_out)


def stage_score(cfg: PipelineConfig, in_dir: Path, out_dir: Path) -> StageStats:
    docs_in = docs_out = words = 0
    if not cfg.scoring["enabled"]:
        for shard in sorted(in_dir.glob("*.docs.jsonl.gz")):
            rows = list(read_jsonl_gz(shard))
            docs_in += len(rows)
            docs_out += len(rows)
            words += sum(r["word_count"] for r in rows)
            write_jsonl_gz(out_dir / shard.name, rows)
        return StageStats("score", docs_in, docs_out, words, words)

    embeddings = quality_mod.load_embeddings(_resolve(cfg.scoring["embeddings"], cfg.base_dir))
    models = {
        category: quality_mod.load_model(_resolve(path, cfg.base_dir))
        for category, path in cfg.scoring["models"].items()
    }

    for shard in sorted(in_dir.glob("*.docs.jsonl.gz")):
        rows = list(read_jsonl_gz(shard))
        missing = sorted(r["doc_id"] for r in rows if r["doc_id"] not in embeddings)
        if missing:
            raise PipelineError(
                f"scoring enabled but {len(missing)} documents lack embeddings: {missing[:10]}"
            )
        for row in rows:
            vector = embeddings.vector(row["doc_id"])
            scores = {
                category: quality_mod.score_document(models[category], vector)
                for category in cfg.scoring["categories"]
            }
            row["scores"] = {k: scores[k] for k in sorted(scores)}
            words += row["word_count"]
        docs_in += len(rows)
        docs_out += len(rows)
        write_jsonl_gz(out_dir / shard.name, rows)
    return StageStats("score", docs_in, docs_out, words, words)


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


@dataclass
class CorpusManifest:
    config: dict
    stages: list[StageStats]
    shard_checksums: dict[str, str]
    scores_present: bool

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "stages": [s.to_dict() for s in self.stages],
            "shard_checksums": dict(sorted(self.shard_checksums.items())),
            "scores_present": self.scores_present,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)


def _stage_dir(cfg: PipelineConfig, stage: str) -> Path:
    return cfg.output_dir / stage


def _run_stage(stage: str, out_dir: Path, fn: Callable[[], StageStats]) -> StageStats:
    """Run one stage; on failure its partial outputs move under a quarantine suffix."""
    if out_dir.exists():
        shutil.rmtree(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return fn()
    except Exception:
        quarantine = out_dir.with_name(out_dir.name + ".quarantine")
        if quarantine.exists():
            shutil.rmtree(quarantine)
        os.replace(out_dir, quarantine)
        raise


def run_pipeline(cfg: PipelineConfig, stages: Optional[Iterable[str]] = None) -> CorpusManifest:
    """Execute stages in order and write the manifest atomically last."""
    selected = list(stages) if stages is not None else list(STAGES)
    for stage in selected:
        if stage not in STAGES:
            raise ConfigError(f"unknown stage {stage!r}")

    count_tokens = make_token_counter(cfg.tokenizer, cfg.base_dir)
    stats: list[StageStats] = []

    dirs = {stage: _stage_dir(cfg, stage) for stage in STAGES}
    if "ingest" in selected:
        stats.append(_run_stage("ingest", dirs["ingest"], lambda: stage_ingest(cfg, dirs["ingest"])))
    if "extract" in selected:
        stats.append(
            _run_stage(
                "extract",
                dirs["extract"],
                lambda: stage_extract(cfg, dirs["ingest"], dirs["extract"], count_tokens),
            )
        )
    if "dedup" in selected:
        stats.append(
            _run_stage("dedup", dirs["dedup"], lambda: stage_dedup(cfg, dirs["extract"], dirs["dedup"]))
        )
    if "filter" in selected:
        stats.append(
            _run_stage("filter", dirs["filter"], lambda: stage_filter(cfg, dirs["dedup"], dirs["filter"]))
        )
    if "score" in selected:
        stats.append(
            _run_stage("score", dirs["score"], lambda: stage_score(cfg, dirs["filter"], dirs["score"]))
        )

    final_dir = dirs[selected[-1]]
    checksums = {
        str(p.relative_to(cfg.output_dir)): _sha256(p)
        for p in sorted(final_dir.glob("*.jsonl.gz"))
    }
    manifest = CorpusManifest(
        config=cfg.to_dict(),
        stages=stats,
        shard_checksums=checksums,
        scores_present=bool(cfg.scoring["enabled"]),
    )
    manifest_path = cfg.output_dir / "manifest.json"
    tmp_path = manifest_path.with_suffix(".json.tmp")
    tmp_path.write_text(manifest.to_json(), encoding="utf-8")
    os.replace(tmp_path, manifest_path)
    return manifest


def load_manifest(path) -> CorpusManifest:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return CorpusManifest(
        config=obj["config"],
        stages=[
            StageStats(
                stage=s["stage"],
                docs_in=s["docs_in"],
                docs_out=s["docs_out"],
                words_in=s["words_in"],
                words_out=s["words_out"],
            )
            for s in obj["stages"]
        ],
        shard_checksums=obj["shard_checksums"],
        scores_present=obj["scores_present"],
    )


def stage_report(manifest: CorpusManifest) -> str:
    """Aligned per-stage accounting table."""
    header = f"{'Stage':<10}{'Docs in':>12}{'Docs out':>12}{'Words in':>14}{'Words out':>14}{'Removed':>10}"
    lines = [header]
    for s in manifest.stages:
        lines.append(
            f"{s.stage:<10}{s.docs_in:>12}{s.docs_out:>12}{s.words_in:>14}{s.words_out:>14}"
            f"{100.0 * s.removal_fraction:>9.1f}%"
        )
    return "\n".join(lines)
