"""Offline ranking evaluation: NDCG@10, MRR@10, and threshold sweeps.

Relevance is binary; a dataset is a list of queries, each with a
non-empty set of relevant item ids (file format: UTF-8 lines of
``query<TAB>id1,id2,...``).

A sweep fixes the similarity threshold (schedule with step 0), runs every
query, and reports ranking metrics plus classification metrics per
threshold.  One scan per query produces the full score set, from which
every threshold's view is derived; the engine is deterministic, so this
equals re-running the query per threshold.  Precision uses the convention
that an empty prediction set is perfectly precise (1.0), because high
thresholds legitimately filter everything.

Sweep CSV schema: header ``threshold,ndcg10,mrr10,precision,recall,avg_found``
then one row per threshold, every value 6-decimal fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .embedder import ModelWeights
from .engine import SearchOutcome, ThresholdSchedule, search
from .errors import EmptyInputError
from .store import EmbeddingStore

__all__ = [
    "EvalQuery",
    "MetricsReport",
    "SweepResult",
    "classification_at_threshold",
    "load_dataset",
    "mrr_at_k",
    "ndcg_at_k",
    "threshold_sweep",
    "write_sweep_csv",
]


@dataclass(frozen=True)
class EvalQuery:
    query_text: str
    relevant_ids: frozenset[str]

    def __post_init__(self):
        if not self.relevant_ids:
            raise EmptyInputError(f"query {self.query_text!r} has no relevant ids")


@dataclass(frozen=True)
class MetricsReport:
    threshold: float
    ndcg_at_10: float
    mrr_at_10: float
    precision: float
    recall: float
    avg_found: float


@dataclass
class SweepResult:
    reports: list[MetricsReport]
    warnings: list[str] = field(default_factory=list)


def ndcg_at_k(ranking: Sequence[str], relevant: Iterable[str], k: int = 10) -> float:
    """Binary-relevance NDCG with ranks starting at 1.

    The ideal DCG places min(k, number of relevant) hits at the top.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant = set(relevant)
    if not relevant:
        raise EmptyInputError("relevant set must be non-empty")
    dcg = 0.0
    for rank, item_id in enumerate(ranking[:k], start=1):
        if item_id in relevant:
            dcg += 1.0 / math.log2(rank + 1)
    ideal = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(k, len(relevant)) + 1))
    return dcg / ideal


def mrr_at_k(ranking: Sequence[str], relevant: Iterable[str], k: int = 10) -> float:
    """Reciprocal rank of the first relevant item in the top-k, else 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    relevant = set(relevant)
    if not relevant:
        raise EmptyInputError("relevant set must be non-empty")
    for rank, item_id in enumerate(ranking[:k], start=1):
        if item_id in relevant:
            return 1.0 / rank
    return 0.0


def classification_at_threshold(
    scores: Sequence[tuple[float, bool]], threshold: float
) -> tuple[float, float]:
    """(precision, recall) with prediction = score >= threshold.

    Precision is 1.0 when nothing is predicted; recall is 1.0 when nothing
    is relevant.
    """
    tp = fp = fn = 0
    for score, is_relevant in scores:
        predicted = score >= threshold
        if predicted and is_relevant:
            tp += 1
        elif predicted:
            fp += 1
        elif is_relevant:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall


def load_dataset(path) -> list[EvalQuery]:
    """Parse ``query<TAB>id1,id2,...`` lines into eval queries."""
    queries: list[EvalQuery] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            query_text, sep, ids = line.partition("\t")
            id_set = frozenset(i.strip() for i in ids.split(",") if i.strip())
            if not sep or not id_set:
                raise ValueError(f"{path}:{lineno}: expected 'query<TAB>id1,id2,...'")
            queries.append(EvalQuery(query_text=query_text, relevant_ids=id_set))
    return queries


def _all_scores(
    store: EmbeddingStore, weights: ModelWeights, query_text: str
) -> SearchOutcome:
    # threshold -1 admits every live record, so the ranking is the full score set
    permissive = ThresholdSchedule(base=-1.0, step=0.0, step_every=1)
    return search(store, weights, query_text, permissive, k=max(1, len(store)))


def threshold_sweep(
    store: EmbeddingStore,
    weights: ModelWeights,
    dataset: Sequence[EvalQuery],
    thresholds: Sequence[float],
    k: int = 10,
) -> SweepResult:
    """One MetricsReport per threshold, in the given threshold order.

    Queries whose relevant ids are missing from the store are skipped and
    listed in the warnings.  NDCG and MRR average over queries;
    precision/recall pool the (score, relevance) decisions across queries.
    """
    if not thresholds:
        raise ValueError("need at least one threshold")
    warnings: list[str] = []
    live = set(store.live_ids())
    scored: list[tuple[EvalQuery, list]] = []
    for query in dataset:
        missing = query.relevant_ids - live
        if missing:
            warnings.append(
                f"query {query.query_text!r} skipped: missing items {sorted(missing)}"
            )
            continue
        outcome = _all_scores(store, weights, query.query_text)
        scored.append((query, list(outcome.ranking)))
    reports = []
    for threshold in thresholds:
        ndcgs, mrrs, founds = [], [], []
        pooled: list[tuple[float, bool]] = []
        for query, ranking in scored:
            kept = [hit.item_id for hit in ranking if hit.score >= threshold]
            ndcgs.append(ndcg_at_k(kept, query.relevant_ids, k))
            mrrs.append(mrr_at_k(kept, query.relevant_ids, k))
            founds.append(float(len(kept)))
            pooled.extend((hit.score, hit.item_id in query.relevant_ids) for hit in ranking)
        precision, recall = classification_at_threshold(pooled, threshold)
        reports.append(
            MetricsReport(
                threshold=float(threshold),
                ndcg_at_10=_mean(ndcgs),
                mrr_at_10=_mean(mrrs),
                precision=precision,
                recall=recall,
                avg_found=_mean(founds),
            )
        )
    return SweepResult(reports=reports, warnings=warnings)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def write_sweep_csv(reports: Sequence[MetricsReport], out: TextIO) -> None:
    out.write("threshold,ndcg10,mrr10,precision,recall,avg_found\n")
    for r in reports:
        out.write(
            f"{r.threshold:.6f},{r.ndcg_at_10:.6f},{r.mrr_at_10:.6f},"
            f"{r.precision:.6f},{r.recall:.6f},{r.avg_found:.6f}\n"
        )
