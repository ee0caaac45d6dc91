import gzip
import hashlib
import json
import os
from pathlib import Path

import numpy as np
import pytest
import yaml

from corpus_fixtures import make_corpus_dir, synthetic_crawl, write_config
from corpusforge.pipeline import (
    STAGES,
    WORKERS_ENV_VAR,
    ConfigError,
    PipelineError,
    load_manifest,
    make_token_counter,
    read_jsonl_gz,
    run_pipeline,
    stage_report,
    validate_config,
    write_jsonl_gz,
)
from corpusforge.quality import EmbeddingMatrix, RegressorModel, save_model, write_embeddings


def run_default(tmp_path, n_records=120, seed=0, extra=None):
    (tmp_path / "crawl-a.warc.gz").write_bytes(synthetic_crawl(n_records, seed=seed))
    config_path = write_config(tmp_path, {"crawl-a": ["crawl-a.warc.gz"]}, seed=seed, extra=extra)
    cfg = validate_config(config_path)
    return cfg, run_pipeline(cfg)


class TestConfigValidation:
    def test_defaults_filled_in(self, tmp_path):
        cfg = validate_config(make_corpus_dir(tmp_path))
        assert cfg.extraction["mode"] == "content"
        assert cfg.dedup["num_perms"] == 128
        assert cfg.filters["ruleset"] == "both"
        assert cfg.scoring["enabled"] is False
        assert cfg.output_dir == tmp_path / "out"

    def test_unknown_top_level_key(self, tmp_path):
        path = make_corpus_dir(tmp_path)
        raw = yaml.safe_load(path.read_text())
        raw["unexpected"] = 1
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ConfigError, match="unexpected"):
            validate_config(path)

    def test_unknown_section_key(self, tmp_path):
        path = make_corpus_dir(tmp_path)
        raw = yaml.safe_load(path.read_text())
        raw["dedup"] = {"bandz": 4}
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ConfigError, match="dedup"):
            validate_config(path)

    def test_no_crawls(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump({"crawls": []}))
        with pytest.raises(ConfigError, match="no crawls"):
            validate_config(path)

    def test_missing_warc_path(self, tmp_path):
        path = write_config(tmp_path, {"crawl-a": ["nope.warc.gz"]})
        with pytest.raises(ConfigError, match="does not exist"):
            validate_config(path)

    def test_band_row_perm_mismatch(self, tmp_path):
        path = make_corpus_dir(tmp_path)
        raw = yaml.safe_load(path.read_text())
        raw["dedup"] = {"bands": 10, "rows": 10, "num_perms": 128}
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ValueError):
            validate_config(path)

    def test_bad_ruleset(self, tmp_path):
        path = make_corpus_dir(tmp_path)
        raw = yaml.safe_load(path.read_text())
        raw["filters"] = {"ruleset": "strictest"}
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ConfigError, match="ruleset"):
            validate_config(path)

    def test_bad_extraction_mode(self, tmp_path):
        path = make_corpus_dir(tmp_path)
        raw = yaml.safe_load(path.read_text())
        raw["extraction"] = {"mode": "magic"}
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ConfigError, match="mode"):
            validate_config(path)

    def test_scoring_requires_models_and_embeddings(self, tmp_path):
        path = make_corpus_dir(tmp_path)
        raw = yaml.safe_load(path.read_text())
        raw["scoring"] = {"enabled": True, "categories": ["edu"], "models": {}}
        path.write_text(yaml.safe_dump(raw))
        with pytest.raises(ConfigError, match="model"):
            validate_config(path)


class TestShardIO:
    def test_round_trip(self, tmp_path):
        rows = [{"doc_id": f"d{i}", "text": "olá"} for i in range(5)]
        path = tmp_path / "x.jsonl.gz"
        assert write_jsonl_gz(path, rows) == 5
        assert list(read_jsonl_gz(path)) == rows

    def test_byte_deterministic(self, tmp_path):
        rows = [{"b": 2, "a": 1}]
        a, b = tmp_path / "a.gz", tmp_path / "b.gz"
        write_jsonl_gz(a, rows)
        write_jsonl_gz(b, rows)
        assert a.read_bytes() == b.read_bytes()

    def test_keys_sorted(self, tmp_path):
        path = tmp_path / "x.jsonl.gz"
        write_jsonl_gz(path, [{"zeta": 1, "alfa": 2}])
        line = gzip.decompress(path.read_bytes()).decode()
        assert line.index("alfa") < line.index("zeta")


class TestTokenCounter:
    def test_words_default(self, tmp_path):
        counter = make_token_counter({"kind": "words"}, tmp_path)
        assert counter("uma frase com cinco palavras") == 5

    def test_vocab_greedy_longest_match(self, tmp_path):
        vocab = tmp_path / "vocab.txt"
        vocab.write_text("casa\nca\nsa\na\n")
        counter = make_token_counter({"kind": "vocab", "vocab_file": "vocab.txt"}, tmp_path)
        assert counter("casa") == 1
        assert counter("casaca") == 2  # casa + ca
        assert counter("xcasa") == 2  # unknown char + casa

    def test_vocab_requires_file(self, tmp_path):
        with pytest.raises(ConfigError):
            make_token_counter({"kind": "vocab"}, tmp_path)

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ConfigError):
            make_token_counter({"kind": "bytes"}, tmp_path)


class TestFullRun:
    def test_stage_counts_monotone(self, tmp_path):
        _, manifest = run_default(tmp_path, n_records=150, seed=1)
        by_stage = {s.stage: s for s in manifest.stages}
        assert list(by_stage) == list(STAGES)
        # Each stage consumes what the previous one produced.
        for prev, cur in zip(STAGES, STAGES[1:]):
            assert by_stage[cur].docs_in == by_stage[prev].docs_out
            assert by_stage[cur].docs_out <= by_stage[cur].docs_in
        assert by_stage["ingest"].docs_out < by_stage["ingest"].docs_in  # language/type drops
        assert by_stage["dedup"].docs_out < by_stage["dedup"].docs_in  # planted near-dups
        assert by_stage["filter"].docs_out < by_stage["filter"].docs_in  # junk pages
        assert by_stage["score"].docs_out > 0

    def test_manifest_checksums_match_files(self, tmp_path):
        cfg, manifest = run_default(tmp_path, seed=2)
        assert manifest.shard_checksums
        for rel, digest in manifest.shard_checksums.items():
            data = (cfg.output_dir / rel).read_bytes()
            assert hashlib.sha256(data).hexdigest() == digest

    def test_manifest_has_no_timestamps(self, tmp_path):
        cfg, _ = run_default(tmp_path, seed=2)
        obj = json.loads((cfg.output_dir / "manifest.json").read_text())

        def keys(node):
            if isinstance(node, dict):
                for k, v in node.items():
                    yield k
                    yield from keys(v)
            elif isinstance(node, list):
                for v in node:
                    yield from keys(v)

        assert not any("time" in k or "date" in k for k in keys(obj))

    def test_manifest_round_trip_and_report(self, tmp_path):
        cfg, manifest = run_default(tmp_path, seed=3)
        loaded = load_manifest(cfg.output_dir / "manifest.json")
        assert loaded.to_dict() == manifest.to_dict()
        report = stage_report(loaded)
        for stage in STAGES:
            assert stage in report

    def test_filter_report_written(self, tmp_path):
        cfg, _ = run_default(tmp_path, seed=4)
        report = json.loads((cfg.output_dir / "filter" / "filter_report.json").read_text())
        assert report["ruleset"] == "both"
        assert report["docs_in"] == report["docs_removed"] + sum(
            1 for _ in read_jsonl_gz(next((cfg.output_dir / "filter").glob("*.docs.jsonl.gz")))
        )

    def test_rerun_byte_identical(self, tmp_path):
        cfg, _ = run_default(tmp_path, seed=5)
        shards = sorted(cfg.output_dir.rglob("*.jsonl.gz")) + [cfg.output_dir / "manifest.json"]
        first = {p: p.read_bytes() for p in shards}
        run_pipeline(cfg)
        assert {p: p.read_bytes() for p in shards} == first

    def test_worker_count_does_not_change_bytes(self, tmp_path, monkeypatch):
        cfg, _ = run_default(tmp_path, seed=6)
        extract_dir = cfg.output_dir / "extract"
        first = {p.name: p.read_bytes() for p in extract_dir.glob("*.jsonl.gz")}
        monkeypatch.setenv(WORKERS_ENV_VAR, "4")
        run_pipeline(cfg, stages=["ingest", "extract"])
        assert {p.name: p.read_bytes() for p in extract_dir.glob("*.jsonl.gz")} == first

    def test_two_crawls_sharded_separately(self, tmp_path):
        (tmp_path / "a.warc.gz").write_bytes(synthetic_crawl(60, seed=7, crawl_id="crawl-a"))
        (tmp_path / "b.warc.gz").write_bytes(synthetic_crawl(60, seed=8, crawl_id="crawl-b"))
        config_path = write_config(
            tmp_path, {"crawl-a": ["a.warc.gz"], "crawl-b": ["b.warc.gz"]}
        )
        cfg = validate_config(config_path)
        run_pipeline(cfg)
        names = {p.name for p in (cfg.output_dir / "score").glob("*.jsonl.gz")}
        assert names == {"crawl-a.docs.jsonl.gz", "crawl-b.docs.jsonl.gz"}
        for crawl_id in ("crawl-a", "crawl-b"):
            for row in read_jsonl_gz(cfg.output_dir / "score" / f"{crawl_id}.docs.jsonl.gz"):
                assert row["crawl_id"] == crawl_id
                assert row["doc_id"].startswith(crawl_id + "-")

    def test_dedup_clusters_recorded(self, tmp_path):
        cfg, _ = run_default(tmp_path, n_records=150, seed=9)
        clusters = list(read_jsonl_gz(cfg.output_dir / "dedup" / "clusters.jsonl.gz"))
        assert clusters
        kept = {
            row["doc_id"]
            for row in read_jsonl_gz(cfg.output_dir / "dedup" / "crawl-a.docs.jsonl.gz")
        }
        for cluster in clusters:
            assert cluster["representative_id"] in kept
            dropped = set(cluster["member_ids"]) - {cluster["representative_id"]}
            assert not dropped & kept

    def test_partial_stage_selection(self, tmp_path):
        cfg = validate_config(make_corpus_dir(tmp_path, seed=10))
        manifest = run_pipeline(cfg, stages=["ingest", "extract"])
        assert [s.stage for s in manifest.stages] == ["ingest", "extract"]
        assert not (cfg.output_dir / "dedup").exists()

    def test_unknown_stage_rejected(self, tmp_path):
        cfg = validate_config(make_corpus_dir(tmp_path, seed=10))
        with pytest.raises(ConfigError):
            run_pipeline(cfg, stages=["ingest", "publish"])


class TestScoringStage:
    def make_scoring_setup(self, tmp_path, seed=11):
        cfg = validate_config(make_corpus_dir(tmp_path, seed=seed))
        run_pipeline(cfg, stages=["ingest", "extract", "dedup", "filter"])
        doc_ids = [
            row["doc_id"]
            for row in read_jsonl_gz(cfg.output_dir / "filter" / "crawl-a.docs.jsonl.gz")
        ]
        rng = np.random.default_rng(seed)
        dim = 8
        matrix = EmbeddingMatrix(
            dim=dim, ids=doc_ids, matrix=rng.normal(size=(len(doc_ids), dim)).astype(np.float32)
        )
        write_embeddings(tmp_path / "embeddings.embv1", matrix)
        for category in ("edu", "stem", "toxic"):
            model = RegressorModel(
                weights=rng.normal(scale=0.3, size=dim), bias=2.5, category=category
            )
            save_model(tmp_path / f"{category}.json", model)
        return cfg, doc_ids

    def scoring_section(self):
        return {
            "scoring": {
                "enabled": True,
                "categories": ["edu", "stem", "toxic"],
                "embeddings": "embeddings.embv1",
                "models": {c: f"{c}.json" for c in ("edu", "stem", "toxic")},
            }
        }

    def test_scores_attached_and_clamped(self, tmp_path):
        _, doc_ids = self.make_scoring_setup(tmp_path)
        config_path = write_config(
            tmp_path, {"crawl-a": ["crawl-a.warc.gz"]}, seed=11, extra=self.scoring_section()
        )
        cfg = validate_config(config_path)
        manifest = run_pipeline(cfg)
        assert manifest.scores_present
        rows = list(read_jsonl_gz(cfg.output_dir / "score" / "crawl-a.docs.jsonl.gz"))
        assert {r["doc_id"] for r in rows} == set(doc_ids)
        for row in rows:
            assert sorted(row["scores"]) == ["edu", "stem", "toxic"]
            assert all(0.0 <= v <= 5.0 for v in row["scores"].values())

    def test_missing_embedding_quarantines_stage(self, tmp_path):
        _, doc_ids = self.make_scoring_setup(tmp_path)
        # Re-write embeddings without the first document.
        rng = np.random.default_rng(0)
        matrix = EmbeddingMatrix(
            dim=8, ids=doc_ids[1:], matrix=rng.normal(size=(len(doc_ids) - 1, 8)).astype(np.float32)
        )
        write_embeddings(tmp_path / "embeddings.embv1", matrix)
        config_path = write_config(
            tmp_path, {"crawl-a": ["crawl-a.warc.gz"]}, seed=11, extra=self.scoring_section()
        )
        cfg = validate_config(config_path)
        with pytest.raises(PipelineError, match="lack embeddings"):
            run_pipeline(cfg)
        assert (cfg.output_dir / "score.quarantine").exists()
        assert not (cfg.output_dir / "score").exists()
