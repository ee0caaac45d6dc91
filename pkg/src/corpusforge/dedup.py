"""Near-duplicate removal: shingling, MinHash signatures, LSH banding.

exact_jaccard is the verification oracle; dedup_crawl is the production
path (LSH candidates + signature estimates + union-find clustering).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .text import words

MERSENNE_61 = np.uint64((1 << 61) - 1)
EMPTY_SENTINEL = np.uint64((1 << 61) - 1)


@dataclass
class ShingleSet:
    shingles: frozenset[int]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass
class MinHashSignature:
    values: np.ndarray  # uint64, length num_perms
    num_perms: int
    seed: int
    empty: bool = False


@dataclass
class DuplicateCluster:
    member_ids: list[str]
    representative_id: str


@dataclass
class DedupParams:
    k: int = 5
    num_perms: int = 128
    seed: int = 0
    bands: int = 16
    rows: int = 8
    threshold: float = 0.8

    def __post_init__(self):
        if self.bands * self.rows != self.num_perms:
            raise ValueError(
                f"bands*rows must equal num_perms ({self.bands}*{self.rows} != {self.num_perms})"
            )
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0,1], got {self.threshold}")


def _hash64(data: str) -> int:
    return int.from_bytes(hashlib.blake2b(data.encode("utf-8"), digest_size=8).digest(), "little")


def shingle(text: str, k: int) -> ShingleSet:
    """Hashes of every k-word window (lowercased words).

    Documents with fewer than k words collapse to one whole-text shingle so
    exact duplicates of tiny pages still match; empty text gives the empty set.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    toks = [w.lower() for w in words(text)]
    if not toks:
        return ShingleSet(frozenset(), k)
    if len(toks) < k:
        return ShingleSet(frozenset({_hash64(" ".join(toks))}), k)
    hashes = {_hash64(" ".join(toks[i : i + k])) for i in range(len(toks) - k + 1)}
    return ShingleSet(frozenset(hashes), k)


def exact_jaccard(a: ShingleSet, b: ShingleSet) -> float:
    """|a∩b| / |a∪b|; 1.0 when both sets are empty."""
    if not a.shingles and not b.shingles:
        return 1.0
    union = len(a.shingles | b.shingles)
    return len(a.shingles & b.shingles) / union


def _permutation_coeffs(num_perms: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    p = int(MERSENNE_61)
    a = rng.integers(1, p, size=num_perms, dtype=np.uint64)
    b = rng.integers(0, p, size=num_perms, dtype=np.uint64)
    return a, b


def minhash_signature(s: ShingleSet, num_perms: int = 128, seed: int = 0) -> MinHashSignature:
    """values[i] = min over shingles of the i-th seeded universal hash."""
    if num_perms < 1:
        raise ValueError("num_perms must be >= 1")
    if not s.shingles:
        return MinHashSignature(
            values=np.full(num_perms, EMPTY_SENTINEL, dtype=np.uint64),
            num_perms=num_perms,
            seed=seed,
            empty=True,
        )
    a, b = _permutation_coeffs(num_perms, seed)
    x = np.fromiter(s.shingles, dtype=np.uint64, count=len(s.shingles))
    # uint64 arithmetic wraps mod 2^64 before the Mersenne reduction; the
    # map stays deterministic and uniform enough for Jaccard estimation.
    with np.errstate(over="ignore"):
        hashed = (a[:, None] * x[None, :] + b[:, None]) % MERSENNE_61
    return MinHashSignature(values=hashed.min(axis=1), num_perms=num_perms, seed=seed)


def estimate_jaccard(x: MinHashSignature, y: MinHashSignature) -> float:
    """Fraction of signature positions that agree."""
    if x.num_perms != y.num_perms or x.seed != y.seed:
        raise ValueError("signatures were built with different parameters")
    return float(np.mean(x.values == y.values))


class _UnionFind:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        root = x
        while self.parent.setdefault(root, root) != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Deterministic: smaller id becomes the root.
            lo, hi = (ra, rb) if ra < rb else (rb, ra)
            self.parent[hi] = lo


def dedup_crawl(
    docs, params: DedupParams | None = None
) -> tuple[list[str], list[DuplicateCluster]]:
    """Cluster near-duplicates and keep one representative per cluster.

    ``docs`` is a sequence of (id, text). LSH banding proposes candidates,
    pairs whose signature estimate reaches the threshold are joined by
    union-find, and the lowest id in each cluster is kept. Output is
    canonical (sorted) and independent of input order.
    """
    if params is None:
        params = DedupParams()

    ids: list[str] = []
    sigs: dict[str, MinHashSignature] = {}
    for doc_id, text in docs:
        if doc_id in sigs:
            raise ValueError(f"duplicate document id {doc_id!r}")
        ids.append(doc_id)
        sigs[doc_id] = minhash_signature(shingle(text, params.k), params.num_perms, params.seed)

    buckets: dict[tuple[int, bytes], list[str]] = {}
    for doc_id in sorted(ids):
        values = sigs[doc_id].values
        for band in range(params.bands):
            key = (band, values[band * params.rows : (band + 1) * params.rows].tobytes())
            buckets.setdefault(key, []).append(doc_id)

    uf = _UnionFind()
    checked: set[tuple[str, str]] = set()
    for bucket in buckets.values():
        if len(bucket) < 2:
            continue
        for i in range(len(bucket)):
            for j in range(i + 1, len(bucket)):
                pair = (bucket[i], bucket[j])
                if pair in checked:
                    continue
                checked.add(pair)
                if estimate_jaccard(sigs[pair[0]], sigs[pair[1]]) >= params.threshold:
                    uf.union(*pair)

    groups: dict[str, list[str]] = {}
    for doc_id in ids:
        groups.setdefault(uf.find(doc_id), []).append(doc_id)

    clusters = [
        DuplicateCluster(member_ids=sorted(members), representative_id=min(members))
        for members in groups.values()
        if len(members) > 1
    ]
    clusters.sort(key=lambda c: c.representative_id)

    dropped = {m for c in clusters for m in c.member_ids if m != c.representative_id}
    kept = sorted(i for i in ids if i not in dropped)
    return kept, clusters
