"""Query answering: streaming brute-force cosine scan plus merge policy.

Approximate-nearest-neighbor structures are deliberately absent.  A
brute-force pass over the store is fast enough at project scale and lets
hits stream out while the scan is still running; a dynamic threshold
rises as hits accumulate so early results are permissive and later ones
must be better.

Semantic results never displace exact ones: the merged list is the
standard (substring) hits in their original order followed by semantic
hits by descending score, deduplicated by item id.  Standard hits carry
the sentinel score 2.0, which sorts ahead of any cosine value; surfaces
that serialize hits render that sentinel as a missing score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .embedder import ModelWeights, embed_text
from .errors import DegenerateVectorError, DimensionMismatchError
from .indexer import ItemKind, kind_from_item_id
from .store import EmbeddingStore

__all__ = [
    "DEFAULT_SCHEDULE",
    "STANDARD_SCORE",
    "SearchHit",
    "SearchOutcome",
    "ThresholdSchedule",
    "cosine_similarity",
    "effective_threshold",
    "merge_results",
    "search",
    "search_stream",
    "standard_search",
]

#: Sentinel score carried by standard (substring) hits; sorts before any cosine.
STANDARD_SCORE = 2.0

_THRESHOLD_CAP = 0.99


@dataclass(frozen=True)
class ThresholdSchedule:
    """Similarity cutoff that rises with the number of hits already found."""

    base: float = 0.30
    step: float = 0.05
    step_every: int = 5

    def __post_init__(self):
        if self.step < 0:
            raise ValueError("step must be >= 0")
        if self.step_every < 1:
            raise ValueError("step_every must be >= 1")


DEFAULT_SCHEDULE = ThresholdSchedule()


@dataclass(frozen=True)
class SearchHit:
    item_id: str
    score: float
    source: str  # "standard" or "semantic"
    kind: ItemKind | None


@dataclass(frozen=True)
class SearchOutcome:
    """Terminal event of a search: the top-k ranking, plus a warning if any."""

    ranking: tuple[SearchHit, ...]
    warning: str | None = None


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a| |b|), clamped to [-1, 1]."""
    va = np.asarray(a, dtype=np.float32)
    vb = np.asarray(b, dtype=np.float32)
    if va.shape != vb.shape:
        raise DimensionMismatchError(f"shape mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na < 1e-12 or nb < 1e-12:
        raise DegenerateVectorError("cosine similarity of a zero vector is undefined")
    return float(min(1.0, max(-1.0, float(va @ vb) / (na * nb))))


def effective_threshold(schedule: ThresholdSchedule, found_count: int) -> float:
    """Threshold in force after ``found_count`` hits, capped at 0.99."""
    if found_count < 0:
        raise ValueError("found_count must be >= 0")
    return min(_THRESHOLD_CAP, schedule.base + schedule.step * (found_count // schedule.step_every))


def _rank_key(hit: SearchHit):
    return (-hit.score, hit.item_id)


def search_stream(
    store: EmbeddingStore,
    weights: ModelWeights,
    query: str,
    schedule: ThresholdSchedule = DEFAULT_SCHEDULE,
    k: int = 10,
) -> Iterator[SearchHit | SearchOutcome]:
    """Scan the store, yielding hits as found and a terminal outcome last.

    The query is embedded exactly once.  A record is emitted the moment
    its cosine score meets the threshold in force, where the threshold is
    recomputed from the number of hits emitted so far.  The final yield is
    always a :class:`SearchOutcome` holding the top-k emitted hits sorted
    by score descending, ties broken by item id ascending.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    try:
        query_vec = embed_text(weights, query)
    except DegenerateVectorError:
        yield SearchOutcome(ranking=(), warning="query embedding is degenerate")
        return
    query_norm = float(np.linalg.norm(query_vec))
    emitted: list[SearchHit] = []
    for ids, block in store.scan_blocks():
        # row-wise reductions instead of a BLAS matvec: identical stored
        # vectors must score bitwise identically regardless of slot, so
        # that equal-score ties deterministically break by item id
        norms = np.sqrt((block * block).sum(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            sims = (block * query_vec).sum(axis=1) / (norms * np.float32(query_norm))
        sims = np.clip(sims, -1.0, 1.0)
        # zero vectors have no direction; they can never become hits
        sims = np.where(norms > 1e-12, sims, -np.inf)
        # the threshold never decreases, so records below the threshold in
        # force here are out for good; only iterate the candidates above
        # it, re-filtering whenever an emission raises the threshold
        threshold = effective_threshold(schedule, len(emitted))
        candidates = np.nonzero(sims >= threshold)[0]
        pos = 0
        while pos < len(candidates):
            current = effective_threshold(schedule, len(emitted))
            if current > threshold:
                threshold = current
                rest = candidates[pos:]
                candidates = rest[sims[rest] >= threshold]
                pos = 0
                continue
            i = int(candidates[pos])
            pos += 1
            hit = SearchHit(ids[i], float(sims[i]), "semantic", kind_from_item_id(ids[i]))
            emitted.append(hit)
            yield hit
    ranking = tuple(sorted(emitted, key=_rank_key)[:k])
    yield SearchOutcome(ranking=ranking)


def search(
    store: EmbeddingStore,
    weights: ModelWeights,
    query: str,
    schedule: ThresholdSchedule = DEFAULT_SCHEDULE,
    k: int = 10,
) -> SearchOutcome:
    """Drain :func:`search_stream` and return just the terminal outcome."""
    outcome = None
    for event in search_stream(store, weights, query, schedule, k):
        if isinstance(event, SearchOutcome):
            outcome = event
    assert outcome is not None
    return outcome


def standard_search(items: Sequence, query: str) -> list[SearchHit]:
    """Case-insensitive substring match over display names.

    ``items`` is any sequence of records with ``item_id``,
    ``display_name``, and ``kind`` attributes.  Order is preserved, so
    results rank by insertion order.  An empty query matches everything.
    """
    needle = query.lower()
    return [
        SearchHit(item.item_id, STANDARD_SCORE, "standard", item.kind)
        for item in items
        if needle in item.display_name.lower()
    ]


def merge_results(
    standard: Sequence[SearchHit], semantic: Sequence[SearchHit]
) -> list[SearchHit]:
    """Standard hits first, semantic appended at the end, deduplicated by id."""
    merged = list(standard)
    seen = {hit.item_id for hit in standard}
    for hit in sorted(semantic, key=_rank_key):
        if hit.item_id not in seen:
            merged.append(hit)
            seen.add(hit.item_id)
    return merged
