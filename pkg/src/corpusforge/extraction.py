"""HTML to text: naive all-text extraction and content-aware boilerplate removal.

Both modes share one block segmentation of the DOM, so every content-mode
output line is by construction a line of the naive output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from html.parser import HTMLParser

from .text import word_count

SKIP_TAGS = {"script", "style", "noscript", "template"}

BLOCK_TAGS = {
    "address", "article", "aside", "blockquote", "body", "dd", "div", "dl",
    "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2",
    "h3", "h4", "h5", "h6", "header", "hr", "html", "li", "main", "nav",
    "ol", "p", "pre", "section", "table", "tbody", "td", "tfoot", "th",
    "thead", "tr", "ul",
}

VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link",
    "meta", "param", "source", "track", "wbr",
}

DEFAULT_BOILERPLATE_TAGS = frozenset({"nav", "header", "footer", "aside", "form"})


class ExtractionMode(Enum):
    NAIVE = "naive"
    CONTENT = "content"


@dataclass
class ExtractionParams:
    mode: ExtractionMode = ExtractionMode.CONTENT
    max_link_density: float = 0.5
    min_block_words: int = 5
    boilerplate_tags: frozenset[str] = DEFAULT_BOILERPLATE_TAGS

    def __post_init__(self):
        if not 0.0 <= self.max_link_density <= 1.0:
            raise ValueError(f"max_link_density must be in [0,1], got {self.max_link_density}")
        if self.min_block_words < 0:
            raise ValueError("min_block_words must be >= 0")


@dataclass
class DocumentText:
    text: str
    word_count: int
    char_count: int

    @classmethod
    def from_text(cls, text: str) -> "DocumentText":
        return cls(text=text, word_count=word_count(text), char_count=len(text))


@dataclass
class _Block:
    """One block-level text run with the signals the content heuristics need."""

    text: str
    parent_id: int
    ancestor_tags: frozenset[str]
    total_chars: int = 0
    link_chars: int = 0

    @property
    def link_density(self) -> float:
        return self.link_chars / self.total_chars if self.total_chars else 0.0


# Whitespace runs containing a newline become one newline, other runs one
# space. This keeps extraction idempotent: re-extracting already extracted
# text (where newlines separate blocks) changes nothing.
_NL_RUN_RE = re.compile(r"[^\S\n]*\n\s*")
_SPACE_RUN_RE = re.compile(r"[^\S\n]+")


def _collapse(text: str) -> str:
    text = _NL_RUN_RE.sub("\n", text)
    text = _SPACE_RUN_RE.sub(" ", text)
    return text.strip()


class _BlockCollector(HTMLParser):
    """Builds the ordered block list in one streaming pass over the markup."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.blocks: list[_Block] = []
        self._parts: list[str] = []
        self._part_is_link: list[bool] = []
        self._tag_stack: list[str] = ["html"]
        self._skip_depth = 0
        self._link_depth = 0
        self._block_counter = 0
        self._block_id_stack: list[int] = [0]

    # -- tag handling ------------------------------------------------------

    def handle_starttag(self, tag, attrs):
        if tag in SKIP_TAGS:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag == "a":
            self._link_depth += 1
        if tag in BLOCK_TAGS:
            self._flush()
            self._tag_stack.append(tag)
            self._block_counter += 1
            self._block_id_stack.append(self._block_counter)
        if tag in VOID_TAGS:
            self._on_void(tag)

    def handle_startendtag(self, tag, attrs):
        if self._skip_depth or tag in SKIP_TAGS:
            return
        self._on_void(tag)

    def _on_void(self, tag):
        if tag in ("br", "hr"):
            self._parts.append("\n" if tag == "hr" else " ")
            self._part_is_link.append(False)

    def handle_endtag(self, tag):
        if tag in SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag == "a":
            self._link_depth = max(0, self._link_depth - 1)
        if tag in BLOCK_TAGS:
            self._flush()
            # Pop back to the matching open tag; the parser is forgiving
            # about mis-nested markup.
            if tag in self._tag_stack[1:]:
                while len(self._tag_stack) > 1:
                    popped = self._tag_stack.pop()
                    self._block_id_stack.pop()
                    if popped == tag:
                        break

    def handle_data(self, data):
        if self._skip_depth or not data:
            return
        self._parts.append(data)
        self._part_is_link.append(self._link_depth > 0)

    def close(self):
        super().close()
        self._flush()

    # -- block assembly ------------------------------------------------------

    def _flush(self):
        if not self._parts:
            return
        raw = "".join(self._parts)
        text = _collapse(raw)
        if text:
            parent = self._block_id_stack[-2] if len(self._block_id_stack) > 1 else 0
            block = _Block(
                text=text,
                parent_id=parent,
                ancestor_tags=frozenset(self._tag_stack),
            )
            for part, is_link in zip(self._parts, self._part_is_link):
                stripped = _collapse(part)
                block.total_chars += len(stripped)
                if is_link:
                    block.link_chars += len(stripped)
            self.blocks.append(block)
        self._parts = []
        self._part_is_link = []


def segment_blocks(html: str) -> list[_Block]:
    """Split a page into block-level text runs, dropping script/style/comments."""
    collector = _BlockCollector()
    collector.feed(html)
    collector.close()
    return collector.blocks


def extract_naive(page) -> DocumentText:
    """All text outside script/style/comment nodes, one line per block."""
    blocks = segment_blocks(page.html)
    return DocumentText.from_text("\n".join(b.text for b in blocks))


def extract_content(page, params: ExtractionParams | None = None) -> DocumentText:
    """Keep only blocks passing the boilerplate heuristics.

    A block is kept when it is outside boilerplate elements, its link
    density is within bounds and it has enough words; a short block is
    rescued when a sibling block was kept on its own merits.
    """
    if params is None:
        params = ExtractionParams()
    if params.mode is not ExtractionMode.CONTENT:
        raise ValueError("extract_content requires params.mode = content")

    blocks = segment_blocks(page.html)
    counts = [word_count(b.text) for b in blocks]

    def clean(b: _Block) -> bool:
        return (
            not (b.ancestor_tags & params.boilerplate_tags)
            and b.link_density <= params.max_link_density
        )

    accepted = [clean(b) and counts[i] >= params.min_block_words for i, b in enumerate(blocks)]
    accepted_parents = {b.parent_id for b, a in zip(blocks, accepted) if a}
    final = [
        a or (clean(b) and b.parent_id in accepted_parents)
        for a, b in zip(accepted, blocks)
    ]
    return DocumentText.from_text("\n".join(b.text for b, keep in zip(blocks, final) if keep))


def extract(page, params: ExtractionParams) -> DocumentText:
    if params.mode is ExtractionMode.NAIVE:
        return extract_naive(page)
    return extract_content(page, params)
