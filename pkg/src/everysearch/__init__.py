"""Local embedding-based search over files, code symbols, and actions.

Everything is computed and stored on the local machine: a tiny hashed
token encoder embeds item names (and optionally function bodies), the
vectors live in a fixed-record binary16 file with random access, and
queries run as a streaming brute-force cosine scan with a dynamic
threshold.  Exact substring matches always rank before semantic ones.
"""

from .embedder import (
    ModelWeights,
    default_weights,
    embed_text,
    forward,
    load_weights,
    save_weights,
    token_id,
)
from .engine import (
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
from .evalkit import mrr_at_k, ndcg_at_k, threshold_sweep
from .indexer import (
    Change,
    ChangeKind,
    IndexConfig,
    IndexItem,
    ItemKind,
    ProjectIndexer,
    extract_items,
)
from .store import EmbeddingStore, open_or_create
from .tokenizer import normalize_query, split_identifier
from .trainer import TrainConfig, TrainingPair, contrastive_loss, gradient_check, train

__version__ = "0.1.0"

__all__ = [
    "Change",
    "ChangeKind",
    "EmbeddingStore",
    "IndexConfig",
    "IndexItem",
    "ItemKind",
    "ModelWeights",
    "ProjectIndexer",
    "SearchHit",
    "SearchOutcome",
    "ThresholdSchedule",
    "TrainConfig",
    "TrainingPair",
    "contrastive_loss",
    "cosine_similarity",
    "default_weights",
    "effective_threshold",
    "embed_text",
    "extract_items",
    "forward",
    "gradient_check",
    "load_weights",
    "merge_results",
    "mrr_at_k",
    "ndcg_at_k",
    "normalize_query",
    "open_or_create",
    "save_weights",
    "search",
    "search_stream",
    "split_identifier",
    "standard_search",
    "threshold_sweep",
    "token_id",
    "train",
]
