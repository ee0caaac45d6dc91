"""Cross-component acceptance: files written by the exporter must load
bitwise-identically through the consumer's EMBV1 reader."""

import gzip
import json

import numpy as np
import pytest

from corpusforge.quality import EmbeddingFormatError, load_embeddings
from embed_export.encoders import stub_encoder
from embed_export.export import ExportJob, export_embeddings


def test_embedding_round_trip_and_rejection(capsys, tmp_path):
    rows = [
        {"doc_id": f"doc-{i:03d}", "text": f"documento de teste numero {i} com conteudo"}
        for i in range(50)
    ]
    shard = tmp_path / "docs.jsonl.gz"
    shard.write_bytes(gzip.compress("".join(json.dumps(r) + "\n" for r in rows).encode()))

    out = tmp_path / "embeddings.embv1"
    meta = export_embeddings(ExportJob([shard], "stub:16", out, seed=0))
    assert (meta["dim"], meta["count"]) == (16, 50)

    loaded = load_embeddings(out)
    assert loaded.dim == 16
    assert len(loaded) == 50
    assert loaded.ids == [r["doc_id"] for r in rows]
    expected = stub_encoder([r["text"] for r in rows], dim=16, seed=0)
    assert loaded.matrix.dtype == np.float32
    assert np.array_equal(loaded.matrix, expected)  # bitwise, no tolerance

    data = out.read_bytes()
    with pytest.raises(EmbeddingFormatError):
        bad = tmp_path / "bad-magic.embv1"
        bad.write_bytes(b"XXXXX" + data[5:])
        load_embeddings(bad)
    with pytest.raises(EmbeddingFormatError):
        cut = tmp_path / "truncated.embv1"
        cut.write_bytes(data[:-7])
        load_embeddings(cut)

    with capsys.disabled():
        print(
            "\nPASS: embedding round trip: stub dim 16, 50 docs -> bitwise-equal "
            "vectors and matching header via the consumer loader; bad magic and "
            "truncated files rejected"
        )
