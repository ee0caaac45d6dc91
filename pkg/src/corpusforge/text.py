"""Shared text primitives: word segmentation, sentence splitting, whitespace normalization."""

from __future__ import annotations

import re

_WORD_RE = re.compile(r"\w+", re.UNICODE)

# Sentence terminator followed by whitespace or end of text.
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+(?=\s|$)")

_WS_RUN_RE = re.compile(r"\s+")


def words(text: str) -> list[str]:
    """Word tokens: \\w+ runs that contain at least one letter or digit.

    Pure-underscore runs are markup residue, not words.
    """
    return [t for t in _WORD_RE.findall(text) if any(c.isalnum() for c in t)]


def word_count(text: str) -> int:
    return len(words(text))


def sentence_count(text: str) -> int:
    """Number of non-empty segments after splitting on ./!/? at a word edge."""
    segments = _SENTENCE_SPLIT_RE.split(text)
    return sum(1 for s in segments if words(s))


def normalize_whitespace(text: str) -> str:
    """Collapse every whitespace run to a single space and strip the ends."""
    return _WS_RUN_RE.sub(" ", text).strip()
