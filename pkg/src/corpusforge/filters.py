"""Heuristic document filters: the MassiveWeb rule set and the adapted C4 rule set.

Thresholds reject strictly beyond the bound; a document sitting exactly on a
threshold is kept. Only the non-editing C4 rules are applied.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Iterator, Optional

from .text import sentence_count, words

# MassiveWeb rule identifiers
WORD_COUNT_LOW = "word_count_low"
WORD_COUNT_HIGH = "word_count_high"
MEAN_WORD_LENGTH_LOW = "mean_word_length_low"
MEAN_WORD_LENGTH_HIGH = "mean_word_length_high"
SYMBOL_RATIO_HIGH = "symbol_ratio_high"
ELLIPSIS_LINES_HIGH = "ellipsis_lines_high"
ALPHA_FRACTION_LOW = "alpha_fraction_low"
STOPWORDS_LOW = "stopwords_low"

MASSIVEWEB_RULES = [
    WORD_COUNT_LOW, WORD_COUNT_HIGH, MEAN_WORD_LENGTH_LOW, MEAN_WORD_LENGTH_HIGH,
    SYMBOL_RATIO_HIGH, ELLIPSIS_LINES_HIGH, ALPHA_FRACTION_LOW, STOPWORDS_LOW,
]

# C4 rule identifiers
CONTAINS_BRACE = "contains_brace"
CONTAINS_LOREM_IPSUM = "contains_lorem_ipsum"
CONTAINS_JAVASCRIPT = "contains_javascript"
CONTAINS_RESTRICTED_WORD = "contains_restricted_word"
TOO_FEW_SENTENCES = "too_few_sentences"

C4_RULES = [
    CONTAINS_BRACE, CONTAINS_LOREM_IPSUM, CONTAINS_JAVASCRIPT,
    CONTAINS_RESTRICTED_WORD, TOO_FEW_SENTENCES,
]

RULESETS = ("massiveweb", "c4", "both", "none")

_ELLIPSIS_COUNT_RE = re.compile(r"\.\.\.|…")


def _load_wordlist(name: str) -> frozenset[str]:
    data = resources.files("corpusforge.data").joinpath(name).read_text(encoding="utf-8")
    return frozenset(line.strip().lower() for line in data.splitlines() if line.strip())


def load_wordlist_file(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


@dataclass
class RuleParams:
    min_words: int = 50
    max_words: int = 100_000
    min_mean_wlen: float = 3.0
    max_mean_wlen: float = 10.0
    max_symbol_ratio: float = 0.1
    max_ellipsis_lines: float = 0.30
    min_alpha_fraction: float = 0.90
    min_stopwords: int = 2
    min_sentences: int = 3
    stopword_list: frozenset[str] = field(default_factory=lambda: _load_wordlist("stopwords_pt.txt"))
    restricted_words: frozenset[str] = field(
        default_factory=lambda: _load_wordlist("restricted_words_pt.txt")
    )

    def __post_init__(self):
        if self.min_words >= self.max_words:
            raise ValueError("min_words must be < max_words")
        if self.min_mean_wlen >= self.max_mean_wlen:
            raise ValueError("min_mean_wlen must be < max_mean_wlen")


@dataclass
class DocStats:
    word_count: int
    mean_word_length: float
    symbol_to_word_ratio: float
    ellipsis_line_fraction: float
    alpha_word_fraction: float
    stopword_count: int
    sentence_count: int
    contains_brace: bool
    contains_lorem_ipsum: bool
    contains_javascript: bool
    restricted_word_hits: list[str]


@dataclass
class FilterVerdict:
    keep: bool
    violated_rules: list[str]


def _restricted_hits(text_lower: str, restricted: frozenset[str]) -> list[str]:
    hits = []
    for entry in sorted(restricted):
        if re.search(rf"(?<!\w){re.escape(entry)}(?!\w)", text_lower):
            hits.append(entry)
    return hits


def doc_stats(text: str, params: Optional[RuleParams] = None) -> DocStats:
    """All rule inputs in one pass; deterministic, empty text gives zero counts."""
    if params is None:
        params = RuleParams()

    toks = words(text)
    n = len(toks)
    total_word_chars = sum(len(t) for t in toks)
    alpha_words = sum(1 for t in toks if any(c.isalpha() for c in t))

    lines = text.splitlines()
    nonempty_lines = [ln for ln in lines if ln.strip()]
    ellipsis_lines = sum(
        1 for ln in nonempty_lines if ln.rstrip().endswith(("...", "…"))
    )

    symbols = text.count("#") + len(_ELLIPSIS_COUNT_RE.findall(text))
    text_lower = text.lower()

    return DocStats(
        word_count=n,
        mean_word_length=total_word_chars / n if n else 0.0,
        symbol_to_word_ratio=symbols / n if n else 0.0,
        ellipsis_line_fraction=ellipsis_lines / len(nonempty_lines) if nonempty_lines else 0.0,
        alpha_word_fraction=alpha_words / n if n else 1.0,
        stopword_count=sum(1 for t in toks if t.lower() in params.stopword_list),
        sentence_count=sentence_count(text),
        contains_brace="{" in text,
        contains_lorem_ipsum="lorem ipsum" in text_lower,
        contains_javascript="javascript" in text_lower,
        restricted_word_hits=_restricted_hits(text_lower, params.restricted_words),
    )


def massiveweb_verdict(stats: DocStats, params: Optional[RuleParams] = None) -> FilterVerdict:
    if params is None:
        params = RuleParams()
    violated = []
    if stats.word_count < params.min_words:
        violated.append(WORD_COUNT_LOW)
    if stats.word_count > params.max_words:
        violated.append(WORD_COUNT_HIGH)
    if stats.mean_word_length < params.min_mean_wlen:
        violated.append(MEAN_WORD_LENGTH_LOW)
    if stats.mean_word_length > params.max_mean_wlen:
        violated.append(MEAN_WORD_LENGTH_HIGH)
    if stats.symbol_to_word_ratio > params.max_symbol_ratio:
        violated.append(SYMBOL_RATIO_HIGH)
    if stats.ellipsis_line_fraction > params.max_ellipsis_lines:
        violated.append(ELLIPSIS_LINES_HIGH)
    if stats.alpha_word_fraction < params.min_alpha_fraction:
        violated.append(ALPHA_FRACTION_LOW)
    if stats.stopword_count < params.min_stopwords:
        violated.append(STOPWORDS_LOW)
    return FilterVerdict(keep=not violated, violated_rules=violated)


def c4_verdict(stats: DocStats, params: Optional[RuleParams] = None) -> FilterVerdict:
    if params is None:
        params = RuleParams()
    violated = []
    if stats.contains_brace:
        violated.append(CONTAINS_BRACE)
    if stats.contains_lorem_ipsum:
        violated.append(CONTAINS_LOREM_IPSUM)
    if stats.contains_javascript:
        violated.append(CONTAINS_JAVASCRIPT)
    if stats.restricted_word_hits:
        violated.append(CONTAINS_RESTRICTED_WORD)
    if stats.sentence_count < params.min_sentences:
        violated.append(TOO_FEW_SENTENCES)
    return FilterVerdict(keep=not violated, violated_rules=violated)


def combined_verdict(text: str, ruleset: str, params: Optional[RuleParams] = None) -> FilterVerdict:
    if ruleset not in RULESETS:
        raise ValueError(f"unknown ruleset {ruleset!r}; expected one of {RULESETS}")
    if ruleset == "none":
        return FilterVerdict(keep=True, violated_rules=[])
    if params is None:
        params = RuleParams()
    stats = doc_stats(text, params)
    violated: list[str] = []
    if ruleset in ("massiveweb", "both"):
        violated += massiveweb_verdict(stats, params).violated_rules
    if ruleset in ("c4", "both"):
        violated += c4_verdict(stats, params).violated_rules
    return FilterVerdict(keep=not violated, violated_rules=violated)


@dataclass
class FilterReport:
    ruleset: str
    docs_in: int = 0
    docs_removed: int = 0
    rule_counts: dict[str, int] = field(default_factory=dict)

    @property
    def removal_fraction(self) -> float:
        return self.docs_removed / self.docs_in if self.docs_in else 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "ruleset": self.ruleset,
                "docs_in": self.docs_in,
                "docs_removed": self.docs_removed,
                "removal_fraction": self.removal_fraction,
                "rule_counts": dict(sorted(self.rule_counts.items())),
            },
            ensure_ascii=False,
            sort_keys=True,
        )


def apply_filters(
    corpus: Iterable[tuple[str, str]],
    ruleset: str = "both",
    params: Optional[RuleParams] = None,
) -> tuple[Iterator[tuple[str, str]], FilterReport]:
    """Filter (id, text) pairs; the report fills in as the stream is consumed."""
    if ruleset not in RULESETS:
        raise ValueError(f"unknown ruleset {ruleset!r}; expected one of {RULESETS}")
    if params is None:
        params = RuleParams()
    report = FilterReport(ruleset=ruleset)

    def gen():
        for doc_id, text in corpus:
            report.docs_in += 1
            verdict = combined_verdict(text, ruleset, params)
            if verdict.keep:
                yield doc_id, text
            else:
                report.docs_removed += 1
                for rule in verdict.violated_rules:
                    report.rule_counts[rule] = report.rule_counts.get(rule, 0) + 1

    return gen(), report
