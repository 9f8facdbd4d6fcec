import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from everysearch.embedder import embed_text
from everysearch.engine import (
    STANDARD_SCORE,
    SearchHit,
    SearchOutcome,
    ThresholdSchedule,
    cosine_similarity,
    effective_threshold,
    merge_results,
    search,
    search_stream,
    standard_search,
)
from everysearch.errors import DegenerateVectorError, DimensionMismatchError
from everysearch.indexer import ItemKind
from everysearch.store import open_or_create


class TestCosine:
    def test_identical(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 0.0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_analytic_value(self):
        s = 1.0 / math.sqrt(2.0)
        got = cosine_similarity([s, s], [1.0, 0.0])
        assert abs(got - 0.70710678) < 1e-6

    def test_scale_invariant_any_scalar(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(32).astype(np.float32)
        b = rng.standard_normal(32).astype(np.float32)
        base = cosine_similarity(a, b)
        for scale in (0.001, 0.7, 3.5, 1234.5):
            assert abs(cosine_similarity(a * scale, b) - base) < 1e-6

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateVectorError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine_similarity([1.0], [1.0, 0.0])


class TestThreshold:
    def test_base(self):
        s = ThresholdSchedule(base=0.30, step=0.05, step_every=5)
        assert effective_threshold(s, 0) == pytest.approx(0.30)

    def test_derived_step(self):
        s = ThresholdSchedule(base=0.30, step=0.05, step_every=5)
        assert effective_threshold(s, 12) == pytest.approx(0.30 + 0.05 * (12 // 5))

    def test_cap(self):
        s = ThresholdSchedule(base=0.98, step=0.05, step_every=1)
        assert effective_threshold(s, 10) == pytest.approx(0.99)

    def test_monotone_in_found_count(self):
        s = ThresholdSchedule(base=0.2, step=0.03, step_every=4)
        values = [effective_threshold(s, n) for n in range(50)]
        assert values == sorted(values)

    def test_bad_schedule(self):
        with pytest.raises(ValueError):
            ThresholdSchedule(step=-0.01)
        with pytest.raises(ValueError):
            ThresholdSchedule(step_every=0)


def oracle_ranking(records, query_vec, schedule, k):
    """Replay the stated policy in float64 with plain Python."""
    qn = math.sqrt(sum(float(x) * float(x) for x in query_vec))
    emitted = []
    for item_id, vec in records:
        n = math.sqrt(sum(float(x) * float(x) for x in vec))
        if n < 1e-12:
            continue
        dot = sum(float(a) * float(b) for a, b in zip(vec, query_vec))
        score = max(-1.0, min(1.0, dot / (n * qn)))
        threshold = min(0.99, schedule.base + schedule.step * (len(emitted) // schedule.step_every))
        if score >= threshold:
            emitted.append((item_id, score))
    ranked = sorted(emitted, key=lambda t: (-t[1], t[0]))[:k]
    return [item_id for item_id, _ in ranked], emitted


def trial_is_fp_safe(records, schedule, query_vec, margin=1e-5):
    """True when no decision sits within fp32 noise of a boundary.

    Exact duplicate records are fine: both paths compute identical scores
    for identical bit patterns, so ties resolve identically.
    """
    qn = math.sqrt(sum(float(x) * float(x) for x in query_vec))
    count = 0
    by_bits = {}
    for item_id, vec in records:
        n = math.sqrt(sum(float(x) * float(x) for x in vec))
        if n < 1e-12:
            continue
        dot = sum(float(a) * float(b) for a, b in zip(vec, query_vec))
        score = max(-1.0, min(1.0, dot / (n * qn)))
        threshold = min(0.99, schedule.base + schedule.step * (count // schedule.step_every))
        if abs(score - threshold) < margin:
            return False
        if score >= threshold:
            count += 1
        by_bits.setdefault(vec.tobytes(), []).append(score)
    distinct = sorted({scores[0] for scores in by_bits.values()})
    return all(b - a >= margin for a, b in zip(distinct, distinct[1:]))


def fill_store(tmp_path, rng, n, dim=16, duplicates=0.1):
    store = open_or_create(tmp_path / "v.embs", dim)
    vecs = []
    for i in range(n):
        if vecs and rng.random() < duplicates:
            vec = vecs[int(rng.integers(len(vecs)))]
        else:
            vec = rng.standard_normal(dim).astype(np.float32)
            vec /= np.linalg.norm(vec)
            vec = vec.astype(np.float16).astype(np.float32)
        vecs.append(vec)
        store.put(f"item{i:05d}", vec)
    return store


class TestSearchStream:
    def test_empty_store(self, tmp_path, tiny_weights):
        with open_or_create(tmp_path / "v.embs", tiny_weights.out_dim) as store:
            events = list(search_stream(store, tiny_weights, "anything"))
        assert len(events) == 1
        assert isinstance(events[0], SearchOutcome)
        assert events[0].ranking == ()

    def test_self_match_ranks_first(self, tmp_path, tiny_weights):
        with open_or_create(tmp_path / "v.embs", tiny_weights.out_dim) as store:
            store.put("file:exact.py", embed_text(tiny_weights, "open recent file"))
            store.put("file:other.py", embed_text(tiny_weights, "quite unrelated words"))
            outcome = search(store, tiny_weights, "open recent file")
        assert outcome.ranking[0].item_id == "file:exact.py"
        assert abs(outcome.ranking[0].score - 1.0) < 1e-3
        assert outcome.ranking[0].kind is ItemKind.FILE

    def test_streamed_hits_respect_threshold_trace(self, tmp_path, tiny_weights):
        rng = np.random.default_rng(5)
        schedule = ThresholdSchedule(base=0.0, step=0.05, step_every=2)
        with fill_store(tmp_path, rng, 60, dim=tiny_weights.out_dim) as store:
            hits, outcome = [], None
            for event in search_stream(store, tiny_weights, "query text", schedule, k=5):
                if isinstance(event, SearchOutcome):
                    outcome = event
                else:
                    hits.append(event)
            # replay: every streamed hit met the threshold in force
            for found, hit in enumerate(hits):
                assert hit.score >= effective_threshold(schedule, found)
            # terminal ranking is drawn from the streamed hits
            assert set(h.item_id for h in outcome.ranking) <= set(h.item_id for h in hits)
            assert [h.score for h in outcome.ranking] == sorted(
                [h.score for h in outcome.ranking], reverse=True
            )

    def test_matches_full_sort_oracle_randomized(self, tmp_path):
        from everysearch.embedder import default_weights

        weights = default_weights(seed=2, buckets=128, token_dim=8, hidden=8, out_dim=16)
        rng = np.random.default_rng(123)
        checked = 0
        trial = 0
        while checked < 25:
            trial += 1
            sub = tmp_path / f"t{trial}"
            sub.mkdir()
            n = int(rng.integers(1, 80))
            schedule = ThresholdSchedule(
                base=float(rng.uniform(-0.2, 0.5)),
                step=float(rng.uniform(0.0, 0.1)),
                step_every=int(rng.integers(1, 6)),
            )
            k = int(rng.integers(1, 12))
            with fill_store(sub, rng, n) as store:
                records = list(store.scan())
                query_vec = embed_text(weights, f"query {trial}")
                if not trial_is_fp_safe(records, schedule, query_vec):
                    continue
                expected, _ = oracle_ranking(records, query_vec, schedule, k)
                outcome = search(store, weights, f"query {trial}", schedule, k)
            assert [h.item_id for h in outcome.ranking] == expected
            checked += 1

    def test_scale_invariance_power_of_two(self, tmp_path, tiny_weights):
        # powers of two are exact in binary16, so scaling the stored
        # vectors must not move any cosine by more than fp noise
        rng = np.random.default_rng(9)
        dim = tiny_weights.out_dim
        base_dir, scaled_dir = tmp_path / "a", tmp_path / "b"
        base_dir.mkdir(), scaled_dir.mkdir()
        with fill_store(base_dir, rng, 40, dim=dim) as store:
            records = list(store.scan())
            outcome_a = search(store, tiny_weights, "some query", k=40)
        with open_or_create(scaled_dir / "v.embs", dim) as store:
            for item_id, vec in records:
                store.put(item_id, vec * 4.0)
            outcome_b = search(store, tiny_weights, "some query", k=40)
        assert [h.item_id for h in outcome_a.ranking] == [h.item_id for h in outcome_b.ranking]
        for a, b in zip(outcome_a.ranking, outcome_b.ranking):
            assert abs(a.score - b.score) < 1e-6

    def test_degenerate_query_warns(self, tmp_path, tiny_weights):
        zeroed = tiny_weights.copy()
        zeroed.token_table[:] = 0
        zeroed.b1[:] = 0
        zeroed.b2[:] = 0
        zeroed.w1[:] = 0
        zeroed.w2[:] = 0
        with open_or_create(tmp_path / "v.embs", tiny_weights.out_dim) as store:
            events = list(search_stream(store, zeroed, "anything"))
        assert isinstance(events[0], SearchOutcome)
        assert events[0].warning is not None
        assert events[0].ranking == ()

    def test_k_validation(self, tmp_path, tiny_weights):
        with open_or_create(tmp_path / "v.embs", tiny_weights.out_dim) as store:
            with pytest.raises(ValueError):
                list(search_stream(store, tiny_weights, "q", k=0))


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_brute_force_equivalence_property(tmp_path_factory, seed):
    from everysearch.embedder import default_weights

    tmp = tmp_path_factory.mktemp("bf")
    weights = default_weights(seed=4, buckets=64, token_dim=8, hidden=8, out_dim=12)
    rng = np.random.default_rng(seed)
    n = int(rng.integers(0, 50))
    schedule = ThresholdSchedule(base=float(rng.uniform(0.0, 0.4)), step=0.05, step_every=3)
    with fill_store(tmp, rng, n, dim=12) as store:
        records = list(store.scan())
        query_vec = embed_text(weights, f"probe {seed}")
        if not trial_is_fp_safe(records, schedule, query_vec):
            return
        expected, _ = oracle_ranking(records, query_vec, schedule, 10)
        outcome = search(store, weights, f"probe {seed}", schedule, 10)
    assert [h.item_id for h in outcome.ranking] == expected


def _item(item_id, name, kind=ItemKind.FILE):
    from everysearch.indexer import ItemRecord

    return ItemRecord(item_id=item_id, kind=kind, display_name=name, origin_path="x")


class TestStandardSearch:
    def test_substring_hit(self):
        items = [_item("a", "OpenFileAction")]
        hits = standard_search(items, "open")
        assert len(hits) == 1
        assert hits[0].source == "standard"
        assert hits[0].score == STANDARD_SCORE

    def test_no_match(self):
        assert standard_search([_item("a", "OpenFileAction")], "xyz") == []

    def test_empty_query_matches_all_in_order(self):
        items = [_item("b", "Beta"), _item("a", "Alpha")]
        assert [h.item_id for h in standard_search(items, "")] == ["b", "a"]


def _hit(item_id, score, source="semantic"):
    return SearchHit(item_id, score, source, None)


class TestMerge:
    def test_dedup(self):
        merged = merge_results(
            [_hit("A", STANDARD_SCORE, "standard")], [_hit("A", 0.9), _hit("B", 0.8)]
        )
        assert [h.item_id for h in merged] == ["A", "B"]

    def test_semantic_only(self):
        merged = merge_results([], [_hit("B", 0.8), _hit("C", 0.7)])
        assert [h.item_id for h in merged] == ["B", "C"]

    def test_stated_policy(self):
        merged = merge_results(
            [_hit("A", STANDARD_SCORE, "standard"), _hit("D", STANDARD_SCORE, "standard")],
            [_hit("C", 0.9), _hit("A", 0.85)],
        )
        assert [h.item_id for h in merged] == ["A", "D", "C"]

    def test_semantic_reordered_by_score(self):
        merged = merge_results([], [_hit("low", 0.2), _hit("high", 0.9)])
        assert [h.item_id for h in merged] == ["high", "low"]
