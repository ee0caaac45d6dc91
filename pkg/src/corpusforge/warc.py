"""WARC archive reading and raw-page extraction.

Reads WARC/1.x archives (optionally gzip-compressed, including the usual
one-gzip-member-per-record layout), keeps records whose metadata lists a
target language, and turns HTTP response records into raw HTML pages.
"""

from __future__ import annotations

import gzip
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO, Callable, Iterator, Optional

logger = logging.getLogger(__name__)

GZIP_MAGIC = b"\x1f\x8b"

# Header carrying per-record language metadata. Entries are comma-separated,
# either a bare code ("pt") or code:confidence ("pt:0.93").
LANGUAGE_HEADER = "warc-identified-content-language"


class RecordType(Enum):
    RESPONSE = "response"
    OTHER = "other"


class WarcError(Exception):
    """Base class for archive-level failures."""


class TruncatedArchiveError(WarcError):
    """The stream ended in the middle of a record; nothing more can be read."""


@dataclass
class MalformedRecord:
    """A record-level parse failure; the reader resyncs and continues."""

    offset: int
    reason: str


class PageSkip(Exception):
    """Record cannot become a page (empty body, non-HTML content type)."""


@dataclass
class WarcRecord:
    record_id: str
    record_type: RecordType
    target_url: str
    http_payload: bytes
    metadata_languages: list[tuple[str, float]] = field(default_factory=list)


@dataclass
class RawPage:
    url: str
    html: str
    crawl_id: str
    languages: list[str] = field(default_factory=list)


def _parse_languages(value: str) -> list[tuple[str, float]]:
    out = []
    for entry in value.split(","):
        entry = entry.strip()
        if not entry:
            continue
        if ":" in entry:
            code, _, conf = entry.partition(":")
            try:
                confidence = float(conf)
            except ValueError:
                confidence = 1.0
        else:
            code, confidence = entry, 1.0
        confidence = min(max(confidence, 0.0), 1.0)
        out.append((code.strip().lower(), confidence))
    return out


class _OffsetReader:
    """Line/byte reader that tracks the offset into the (decompressed) stream."""

    def __init__(self, stream: BinaryIO):
        self._stream = stream
        self.offset = 0

    def readline(self) -> bytes:
        line = self._stream.readline()
        self.offset += len(line)
        return line

    def read(self, n: int) -> bytes:
        data = self._stream.read(n)
        self.offset += len(data)
        return data


def _open_maybe_gzip(stream: BinaryIO) -> BinaryIO:
    buffered = stream if isinstance(stream, io.BufferedReader) else io.BufferedReader(stream)  # type: ignore[arg-type]
    head = buffered.peek(2)[:2]
    if head == GZIP_MAGIC:
        # GzipFile transparently reads concatenated members, which covers
        # per-record gzip compression.
        return gzip.GzipFile(fileobj=buffered)  # type: ignore[return-value]
    return buffered


def read_warc_records(
    stream: BinaryIO,
    on_error: Optional[Callable[[MalformedRecord], None]] = None,
) -> Iterator[WarcRecord]:
    """Yield records in file order.

    Malformed record headers are reported through ``on_error`` (default: a
    warning log) and the reader resyncs to the next record; a stream that
    ends mid-record raises TruncatedArchiveError.
    """
    if on_error is None:
        on_error = lambda err: logger.warning("malformed WARC record at offset %d: %s", err.offset, err.reason)

    reader = _OffsetReader(_open_maybe_gzip(stream))

    while True:
        record_start = reader.offset
        line = reader.readline()
        if not line:
            return
        stripped = line.strip()
        if not stripped:
            continue  # separator between records
        if not stripped.startswith(b"WARC/1."):
            on_error(MalformedRecord(record_start, f"expected WARC/1.x version line, got {stripped[:40]!r}"))
            _resync(reader)
            continue

        headers, ok = _read_headers(reader, record_start, on_error)
        if not ok:
            continue

        length_raw = headers.get("content-length")
        if length_raw is None or not length_raw.isdigit():
            on_error(MalformedRecord(record_start, "missing or non-numeric Content-Length"))
            _resync(reader)
            continue
        length = int(length_raw)

        payload = reader.read(length)
        if len(payload) < length:
            raise TruncatedArchiveError(
                f"record at offset {record_start} declares {length} content bytes, got {len(payload)}"
            )

        warc_type = headers.get("warc-type", "")
        record = WarcRecord(
            record_id=headers.get("warc-record-id", "").strip("<>"),
            record_type=RecordType.RESPONSE if warc_type == "response" else RecordType.OTHER,
            target_url=headers.get("warc-target-uri", ""),
            http_payload=payload,
            metadata_languages=_parse_languages(headers.get(LANGUAGE_HEADER, "")),
        )
        if not record.record_id:
            on_error(MalformedRecord(record_start, "missing WARC-Record-ID"))
            continue
        yield record


def _read_headers(
    reader: _OffsetReader,
    record_start: int,
    on_error: Callable[[MalformedRecord], None],
) -> tuple[dict[str, str], bool]:
    headers: dict[str, str] = {}
    while True:
        line = reader.readline()
        if not line:
            raise TruncatedArchiveError(f"stream ended inside headers of record at offset {record_start}")
        if line in (b"\r\n", b"\n"):
            return headers, True
        try:
            text = line.decode("utf-8").rstrip("\r\n")
            name, _, value = text.partition(":")
            if not _ or not name.strip():
                on_error(MalformedRecord(record_start, f"bad header line {text[:60]!r}"))
                _resync(reader)
                return headers, False
            headers[name.strip().lower()] = value.strip()
        except UnicodeDecodeError:
            on_error(MalformedRecord(record_start, "undecodable header line"))
            _resync(reader)
            return headers, False


def _resync(reader: _OffsetReader) -> None:
    """Skip forward until a blank line (end of the broken record's headers)."""
    while True:
        line = reader.readline()
        if not line or line in (b"\r\n", b"\n"):
            return


def select_language(record: WarcRecord, target: str) -> bool:
    """True iff ``target`` appears among the record's language codes.

    Membership only; confidences are ignored.
    """
    target = target.lower()
    return any(code == target for code, _ in record.metadata_languages)


def to_raw_page(record: WarcRecord, crawl_id: str) -> RawPage:
    """Strip the HTTP envelope from a response record and decode its body.

    Raises PageSkip for empty bodies and non-HTML content types.
    """
    if record.record_type is not RecordType.RESPONSE:
        raise ValueError(f"record {record.record_id} is not a response record")

    payload = record.http_payload
    sep = payload.find(b"\r\n\r\n")
    if sep >= 0:
        head, body = payload[:sep], payload[sep + 4 :]
    else:
        sep = payload.find(b"\n\n")
        if sep >= 0:
            head, body = payload[:sep], payload[sep + 2 :]
        else:
            head, body = b"", payload

    content_type = ""
    for raw_line in head.split(b"\n"):
        line = raw_line.decode("utf-8", errors="replace").strip()
        if line.lower().startswith("content-type:"):
            content_type = line.partition(":")[2].strip().lower()

    if content_type and "text/html" not in content_type:
        raise PageSkip(f"content type {content_type!r} is not HTML")
    if not body.strip():
        raise PageSkip("empty HTTP body")

    html = body.decode("utf-8", errors="replace")
    return RawPage(
        url=record.target_url,
        html=html,
        crawl_id=crawl_id,
        languages=[code for code, _ in record.metadata_languages],
    )
