"""Contrastive fine-tuning of the tiny encoder, backprop written by hand.

Training data is explicit labeled pairs: a query text, an item text, and
a positive/negative label.  Both texts pass through the same encoder
(shared weights), and the hinge loss on their cosine similarity pushes
positives above the positive margin and negatives below the negative one
(defaults 1 and 0).

The optimizer is plain SGD, single threaded, so a seed fully determines
the result.  The subgradient at a hinge kink (similarity exactly at the
margin) is zero; the finite-difference checker skips coordinates whose
perturbed similarity lands within 1e-6 of the kink or straddles it.

Only the dense parameters train.  The tokenizer and the token-to-bucket
hash are frozen, so a trained model drops in wherever the untrained one
was used.

Pairs file format: UTF-8, one pair per line,
``label<TAB>query<TAB>item_text`` with label 1 (positive) or 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedder import PLACEHOLDER_TOKEN, ModelWeights, token_id
from .errors import DegenerateVectorError, EmptyInputError, NumericDivergenceError
from .tokenizer import normalize_query

__all__ = [
    "TrainConfig",
    "TrainingPair",
    "contrastive_loss",
    "gradient_check",
    "load_pairs",
    "pair_gradients",
    "train",
]

_KINK_EPS = 1e-6


@dataclass(frozen=True)
class TrainingPair:
    query_text: str
    item_text: str
    label: int  # 1 positive, 0 negative

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 16
    positive_margin: float = 1.0
    negative_margin: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.positive_margin <= self.negative_margin:
            raise ValueError("positive margin must exceed negative margin")


def contrastive_loss(
    similarity: float, label: int, m_pos: float = 1.0, m_neg: float = 0.0
) -> float:
    """Hinge on cosine similarity: positives pushed up, negatives down."""
    if not -1.0 - 1e-4 <= similarity <= 1.0 + 1e-4:
        raise ValueError(f"similarity {similarity} outside [-1, 1]")
    s = min(1.0, max(-1.0, similarity))
    if label == 1:
        return max(0.0, m_pos - s)
    return max(0.0, s - m_neg)


def _bucket_ids(text: str, buckets: int) -> list[int]:
    # must mirror embedder.forward: placeholder for empty, sorted pooling order
    tokens = normalize_query(text) or [PLACEHOLDER_TOKEN]
    return sorted(token_id(t, buckets) for t in tokens)


def _encode(w: ModelWeights, ids: list[int]):
    with np.errstate(over="ignore", invalid="ignore"):
        pooled = w.token_table[ids].mean(axis=0)
        hid = np.tanh(pooled @ w.w1 + w.b1)
        pre_out = hid @ w.w2 + w.b2
        norm = float(np.sqrt(pre_out @ pre_out))
    if not math.isfinite(norm):
        raise NumericDivergenceError("encoder output became non-finite")
    if norm < 1e-12:
        raise DegenerateVectorError("encoder output collapsed to zero during training")
    emb = pre_out / norm
    return pooled, hid, pre_out, norm, emb


def _zero_grads(w: ModelWeights) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in w.parameter_groups().items()}


def _backprop_side(w, grads, ids, pooled, hid, norm, emb, g_emb) -> None:
    g_pre = (g_emb - (g_emb @ emb) * emb) / norm
    grads["w2"] += np.outer(hid, g_pre)
    grads["b2"] += g_pre
    g_hid = w.w2 @ g_pre
    g_pre_h = (1.0 - hid * hid) * g_hid
    grads["w1"] += np.outer(pooled, g_pre_h)
    grads["b1"] += g_pre_h
    g_pooled = w.w1 @ g_pre_h
    np.add.at(grads["token_table"], ids, g_pooled / len(ids))


def _pair_pass(
    w: ModelWeights,
    q_ids: list[int],
    i_ids: list[int],
    label: int,
    m_pos: float,
    m_neg: float,
    grads: dict[str, np.ndarray] | None = None,
):
    """Loss for one pair; accumulates gradients into ``grads`` when given.

    Returns ``(loss, clamped_similarity, hinge_active)``.
    """
    pooled_q, hid_q, _, norm_q, emb_q = _encode(w, q_ids)
    pooled_i, hid_i, _, norm_i, emb_i = _encode(w, i_ids)
    raw_s = float(emb_q @ emb_i)
    if not math.isfinite(raw_s):
        raise NumericDivergenceError("pair similarity became non-finite")
    s = min(1.0, max(-1.0, raw_s))
    if label == 1:
        active = s < m_pos
        loss = m_pos - s if active else 0.0
        dloss_ds = -1.0 if active else 0.0
    else:
        active = s > m_neg
        loss = s - m_neg if active else 0.0
        dloss_ds = 1.0 if active else 0.0
    if grads is not None and dloss_ds != 0.0:
        _backprop_side(w, grads, q_ids, pooled_q, hid_q, norm_q, emb_q, dloss_ds * emb_i)
        _backprop_side(w, grads, i_ids, pooled_i, hid_i, norm_i, emb_i, dloss_ds * emb_q)
    return loss, s, active


def pair_gradients(
    weights: ModelWeights,
    pair: TrainingPair,
    m_pos: float = 1.0,
    m_neg: float = 0.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and analytic gradients for a single pair, for inspection."""
    q_ids = _bucket_ids(pair.query_text, weights.buckets)
    i_ids = _bucket_ids(pair.item_text, weights.buckets)
    grads = _zero_grads(weights)
    loss, _, _ = _pair_pass(weights, q_ids, i_ids, pair.label, m_pos, m_neg, grads)
    return loss, grads


def train(
    weights: ModelWeights,
    pairs: list[TrainingPair],
    config: TrainConfig = TrainConfig(),
) -> tuple[ModelWeights, list[float]]:
    """Mini-batch SGD on the mean pair loss; returns new weights and history.

    The input weights are not mutated.  History holds one mean loss per
    epoch, measured as the epoch streams by (before each batch update).
    Deterministic for a fixed seed, data, and config.
    """
    if not pairs:
        raise EmptyInputError("need at least one training pair")
    w = weights.copy()
    w.validate()
    encoded = [
        (
            _bucket_ids(p.query_text, w.buckets),
            _bucket_ids(p.item_text, w.buckets),
            p.label,
        )
        for p in pairs
    ]
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(len(encoded))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grads = _zero_grads(w)
            batch_loss = 0.0
            for j in batch:
                q_ids, i_ids, label = encoded[j]
                loss, _, _ = _pair_pass(
                    w, q_ids, i_ids, label, config.positive_margin, config.negative_margin, grads
                )
                batch_loss += loss
            if not np.isfinite(batch_loss):
                raise NumericDivergenceError("training loss became non-finite")
            scale = config.learning_rate / len(batch)
            params = w.parameter_groups()
            for name, grad in grads.items():
                params[name] -= scale * grad
            epoch_loss += batch_loss
        history.append(epoch_loss / len(encoded))
    return w, history


def gradient_check(
    weights: ModelWeights,
    pair: TrainingPair,
    epsilon: float = 1e-4,
    coords_per_group: int = 100,
    m_pos: float = 1.0,
    m_neg: float = 0.0,
    seed: int = 0,
) -> float:
    """Max relative error of analytic gradients vs central finite differences.

    Runs entirely in float64.  Samples ``coords_per_group`` random
    coordinates from every parameter group (all of them when the group is
    smaller).  Coordinates whose perturbation straddles the hinge kink, or
    lands within 1e-6 of it, are skipped.
    """
    if not 1e-6 <= epsilon <= 1e-2:
        raise ValueError("epsilon must be in [1e-6, 1e-2]")
    w = ModelWeights(
        **{name: arr.astype(np.float64) for name, arr in weights.parameter_groups().items()}
    )
    q_ids = _bucket_ids(pair.query_text, w.buckets)
    i_ids = _bucket_ids(pair.item_text, w.buckets)
    margin = m_pos if pair.label == 1 else m_neg
    grads = _zero_grads(w)
    _pair_pass(w, q_ids, i_ids, pair.label, m_pos, m_neg, grads)
    rng = np.random.default_rng(seed)
    max_rel = 0.0
    for name, arr in w.parameter_groups().items():
        flat = arr.reshape(-1)
        gflat = grads[name].reshape(-1)
        count = min(coords_per_group, flat.size)
        for idx in rng.choice(flat.size, size=count, replace=False):
            orig = flat[idx]
            flat[idx] = orig + epsilon
            loss_hi, s_hi, active_hi = _pair_pass(w, q_ids, i_ids, pair.label, m_pos, m_neg)
            flat[idx] = orig - epsilon
            loss_lo, s_lo, active_lo = _pair_pass(w, q_ids, i_ids, pair.label, m_pos, m_neg)
            flat[idx] = orig
            if active_hi != active_lo:
                continue
            if min(abs(s_hi - margin), abs(s_lo - margin)) < _KINK_EPS:
                continue
            fd = (loss_hi - loss_lo) / (2.0 * epsilon)
            analytic = gflat[idx]
            denom = max(abs(analytic), abs(fd), 1e-8)
            max_rel = max(max_rel, abs(analytic - fd) / denom)
    return max_rel


def load_pairs(path) -> list[TrainingPair]:
    """Parse a ``label<TAB>query<TAB>item_text`` pairs file."""
    pairs: list[TrainingPair] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3 or parts[0] not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: expected 'label<TAB>query<TAB>item'")
            pairs.append(TrainingPair(query_text=parts[1], item_text=parts[2], label=int(parts[0])))
    return pairs
