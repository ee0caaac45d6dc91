"""Fixture builders shared by the test modules."""

from __future__ import annotations

import gzip


def http_response(body: bytes, content_type: str | None = "text/html; charset=utf-8") -> bytes:
    lines = [b"HTTP/1.1 200 OK"]
    if content_type is not None:
        lines.append(f"Content-Type: {content_type}".encode())
    lines.append(f"Content-Length: {len(body)}".encode())
    return b"\r\n".join(lines) + b"\r\n\r\n" + body


def warc_record(
    record_id: str,
    warc_type: str = "response",
    url: str = "http://example.com/",
    payload: bytes = b"",
    languages: str | None = None,
) -> bytes:
    headers = [
        b"WARC/1.0",
        f"WARC-Type: {warc_type}".encode(),
        f"WARC-Record-ID: <{record_id}>".encode(),
        f"WARC-Target-URI: {url}".encode(),
        f"Content-Length: {len(payload)}".encode(),
    ]
    if languages is not None:
        headers.append(f"WARC-Identified-Content-Language: {languages}".encode())
    return b"\r\n".join(headers) + b"\r\n\r\n" + payload + b"\r\n\r\n"


def build_warc(records: list[bytes], compress: str = "none") -> bytes:
    """compress: none | whole | per-record (the Common Crawl layout)."""
    if compress == "none":
        return b"".join(records)
    if compress == "whole":
        return gzip.compress(b"".join(records), mtime=0)
    if compress == "per-record":
        return b"".join(gzip.compress(r, mtime=0) for r in records)
    raise ValueError(compress)


def html_response_record(
    record_id: str,
    html: str,
    url: str = "http://example.com/",
    languages: str = "pt",
) -> bytes:
    return warc_record(
        record_id,
        warc_type="response",
        url=url,
        payload=http_response(html.encode("utf-8")),
        languages=languages,
    )
