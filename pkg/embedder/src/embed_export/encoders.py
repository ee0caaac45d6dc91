"""Text encoders: a deterministic stub for offline use and an optional
transformers-backed encoder."""

from __future__ import annotations

import hashlib

import numpy as np


class EncoderError(RuntimeError):
    pass


def stub_encoder(texts: list[str], dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit-norm vectors from a seeded hash of each text.

    Stands in for a real encoder so exports can be exercised without model
    downloads; identical text always maps to the identical vector.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    out = np.empty((len(texts), dim), dtype=np.float32)
    for i, text in enumerate(texts):
        digest = hashlib.blake2b(f"{seed}:{text}".encode("utf-8"), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        vector = rng.standard_normal(dim)
        out[i] = (vector / np.linalg.norm(vector)).astype(np.float32)
    return out


class StubEncoder:
    def __init__(self, dim: int, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self.max_length = None  # the stub never truncates

    def encode(self, texts: list[str], pooling: str = "mean") -> np.ndarray:
        del pooling  # the stub has no token vectors to pool
        return stub_encoder(texts, self.dim, self.seed)


class TransformersEncoder:
    """Wraps a pretrained masked-language-model encoder; vectors are pooled
    final-layer token states (mean over non-padding tokens, or the first
    token for cls pooling). Long inputs are truncated at the model limit."""

    def __init__(self, model_id: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(
                f"encoder {model_id!r} needs the transformers extra installed"
            ) from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderError(f"could not load encoder {model_id!r}: {exc}") from exc
        self.model.eval()
        self._torch = torch
        self.dim = self.model.config.hidden_size
        self.max_length = self.tokenizer.model_max_length

    def encode(self, texts: list[str], pooling: str = "mean") -> np.ndarray:
        torch = self._torch
        batch = self.tokenizer(
            texts, padding=True, truncation=True, max_length=self.max_length,
            return_tensors="pt",
        )
        with torch.no_grad():
            hidden = self.model(**batch).last_hidden_state
        if pooling == "cls":
            pooled = hidden[:, 0, :]
        else:
            mask = batch["attention_mask"].unsqueeze(-1)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1)
        return pooled.numpy().astype(np.float32)


def make_encoder(encoder_id: str, seed: int = 0):
    """'stub:<dim>' builds the offline stub, anything else is treated as a
    pretrained model identifier."""
    if encoder_id.startswith("stub:"):
        try:
            dim = int(encoder_id.split(":", 1)[1])
        except ValueError:
            raise EncoderError(f"bad stub encoder spec {encoder_id!r}, expected stub:<dim>")
        if dim < 1:
            raise EncoderError(f"stub dim must be >= 1, got {dim}")
        return StubEncoder(dim, seed=seed)
    return TransformersEncoder(encoder_id)
