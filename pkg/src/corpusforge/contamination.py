"""Evaluation-set leakage detection via fixed-length substring probes.

A training document is contaminated by an evaluation example when every one
of the example's sampled probe substrings occurs in the document. Both sides
are whitespace-normalized before matching by default, so formatting
differences cannot hide a leak; an exact-byte mode is available.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .text import normalize_whitespace

DEFAULT_NUM_SUBSTRINGS = 3
DEFAULT_SUBSTRING_LENGTH = 50


@dataclass
class ContaminationProbe:
    example_id: str
    substrings: list[str]
    seed: int


@dataclass
class ContaminationReport:
    contaminated_pairs: list[tuple[str, str]]  # (example_id, doc_id)
    per_task_rates: dict[str, float]
    examples_scanned: int = 0
    docs_scanned: int = 0

    def to_json(self) -> str:
        return json.dumps(
            {
                "contaminated_pairs": [list(p) for p in self.contaminated_pairs],
                "per_task_rates": dict(sorted(self.per_task_rates.items())),
                "examples_scanned": self.examples_scanned,
                "docs_scanned": self.docs_scanned,
            },
            ensure_ascii=False,
            sort_keys=True,
        )


def make_probe(
    example_text: str,
    n: int = DEFAULT_NUM_SUBSTRINGS,
    length: int = DEFAULT_SUBSTRING_LENGTH,
    seed: int = 0,
    example_id: str = "",
    normalize: bool = True,
) -> ContaminationProbe:
    """Sample n substrings of the given length at seeded-random offsets.

    An example shorter than the substring length yields its whole text as
    the single probe.
    """
    if not example_text:
        raise ValueError(f"empty example text for {example_id!r}")
    text = normalize_whitespace(example_text) if normalize else example_text
    if not text:
        raise ValueError(f"example {example_id!r} is whitespace only")
    if len(text) <= length:
        return ContaminationProbe(example_id=example_id, substrings=[text], seed=seed)
    rng = random.Random(seed)
    offsets = sorted(rng.randrange(0, len(text) - length + 1) for _ in range(n))
    return ContaminationProbe(
        example_id=example_id,
        substrings=[text[o : o + length] for o in offsets],
        seed=seed,
    )


def is_contaminated(doc_text: str, probe: ContaminationProbe, normalize: bool = True) -> bool:
    """True iff every probe substring occurs in the document."""
    haystack = normalize_whitespace(doc_text) if normalize else doc_text
    needles = (
        [normalize_whitespace(s) for s in probe.substrings] if normalize else probe.substrings
    )
    return all(n in haystack for n in needles)


def _example_seed(base_seed: int, example_id: str) -> int:
    digest = hashlib.blake2b(
        f"{base_seed}:{example_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


class _SubstringIndex:
    """Bucket probe substrings by a fixed-length prefix so one sliding pass
    over a document finds all candidate matches."""

    def __init__(self, patterns: dict[str, list[tuple[str, int]]]):
        # patterns: text -> [(example_id, probe position)]
        self.key_len = min((len(p) for p in patterns), default=0)
        self.buckets: dict[str, list[tuple[str, str, int]]] = {}
        for text, refs in patterns.items():
            key = text[: self.key_len]
            for example_id, pos in refs:
                self.buckets.setdefault(key, []).append((text, example_id, pos))

    def matches(self, haystack: str) -> set[tuple[str, int]]:
        """(example_id, probe position) pairs whose pattern occurs in the haystack."""
        found: set[tuple[str, int]] = set()
        k = self.key_len
        if k == 0:
            return found
        for i in range(len(haystack) - k + 1):
            for text, example_id, pos in self.buckets.get(haystack[i : i + k], ()):
                if (example_id, pos) not in found and haystack.startswith(text, i):
                    found.add((example_id, pos))
        return found


def scan_corpus(
    corpus: Iterable[tuple[str, str]],
    examples: Iterable[dict],
    n: int = DEFAULT_NUM_SUBSTRINGS,
    length: int = DEFAULT_SUBSTRING_LENGTH,
    seed: int = 0,
    normalize: bool = True,
) -> ContaminationReport:
    """Single pass over (doc_id, text) pairs against all evaluation examples.

    Examples are dicts {example_id, task, text}. Per-task rate = fraction of
    the task's examples found in at least one document.
    """
    probes: dict[str, ContaminationProbe] = {}
    example_task: dict[str, str] = {}
    patterns: dict[str, list[tuple[str, int]]] = {}
    for ex in examples:
        example_id = ex["example_id"]
        if example_id in probes:
            raise ValueError(f"duplicate example id {example_id!r}")
        probe = make_probe(
            ex["text"],
            n=n,
            length=length,
            seed=_example_seed(seed, example_id),
            example_id=example_id,
            normalize=normalize,
        )
        probes[example_id] = probe
        example_task[example_id] = ex.get("task", "")
        for pos, sub in enumerate(probe.substrings):
            patterns.setdefault(sub, []).append((example_id, pos))

    index = _SubstringIndex(patterns)
    pairs: list[tuple[str, str]] = []
    docs_scanned = 0
    for doc_id, text in corpus:
        docs_scanned += 1
        haystack = normalize_whitespace(text) if normalize else text
        hit_positions = index.matches(haystack)
        hits_per_example: dict[str, int] = {}
        for example_id, _pos in hit_positions:
            hits_per_example[example_id] = hits_per_example.get(example_id, 0) + 1
        for example_id, count in hits_per_example.items():
            if count == len(probes[example_id].substrings):
                pairs.append((example_id, doc_id))

    pairs.sort()
    contaminated_examples = {e for e, _ in pairs}
    task_totals: dict[str, int] = {}
    task_hits: dict[str, int] = {}
    for example_id, task in example_task.items():
        task_totals[task] = task_totals.get(task, 0) + 1
        if example_id in contaminated_examples:
            task_hits[task] = task_hits.get(task, 0) + 1
    rates = {task: task_hits.get(task, 0) / total for task, total in task_totals.items()}

    return ContaminationReport(
        contaminated_pairs=pairs,
        per_task_rates=rates,
        examples_scanned=len(probes),
        docs_scanned=docs_scanned,
    )
