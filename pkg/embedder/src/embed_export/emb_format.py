"""Writer for the EMBV1 embedding interchange format.

Layout: magic b"EMBV1", little-endian u32 dim, u64 record count, then per
record a u16 id byte length, the UTF-8 id, and dim little-endian float32
values.
"""

from __future__ import annotations

import struct
from typing import Iterable

import numpy as np

MAGIC = b"EMBV1"


class FormatError(ValueError):
    pass


def write_embv1(fh, dim: int, records: Iterable[tuple[str, np.ndarray]]) -> int:
    """Stream (doc_id, vector) pairs; returns the record count.

    The count is written last by seeking back, so callers must hand in a
    seekable binary file object.
    """
    if dim < 1:
        raise FormatError(f"dim must be >= 1, got {dim}")
    fh.write(MAGIC)
    fh.write(struct.pack("<IQ", dim, 0))
    count = 0
    for doc_id, vector in records:
        vector = np.asarray(vector, dtype="<f4")
        if vector.shape != (dim,):
            raise FormatError(f"{doc_id}: vector shape {vector.shape}, expected ({dim},)")
        if not np.all(np.isfinite(vector)):
            raise FormatError(f"{doc_id}: vector contains non-finite values")
        encoded = doc_id.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise FormatError(f"document id too long ({len(encoded)} bytes)")
        fh.write(struct.pack("<H", len(encoded)))
        fh.write(encoded)
        fh.write(vector.tobytes())
        count += 1
    fh.seek(len(MAGIC) + 4)
    fh.write(struct.pack("<Q", count))
    return count
