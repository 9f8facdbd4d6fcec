"""Tiny embedding model and its weight file format.

The model is deliberately small so that indexing stays fast on ordinary
desktops: a hashed token-embedding table, mean pooling, and two dense
layers with a tanh between them.  The output is L2-normalized, so cosine
similarity against other embeddings is a plain dot product.

Vocabulary is the hashing trick: a token maps to a bucket via FNV-1a 64
modulo the table size, which keeps the model free of any fitted
vocabulary file.  Computation runs in fp32; weights and stored vectors
are held on disk as IEEE 754 binary16 to halve the footprint.

Weight file layout (little-endian), 16-byte header then parameters:

    bytes 0-3   magic ``EMBW``
    4-5         format version u16 (= 1)
    6-9         bucket count u32
    10-11       token dim u16
    12-13       hidden dim u16
    14-15       output dim u16
    16..        binary16 parameters in order: token table (row-major),
                layer-1 matrix, layer-1 bias, layer-2 matrix, layer-2 bias
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateVectorError,
    DimensionMismatchError,
    EmptyInputError,
    FormatError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .tokenizer import normalize_query

__all__ = [
    "DEFAULT_SEED",
    "PLACEHOLDER_TOKEN",
    "ModelWeights",
    "default_weights",
    "embed_text",
    "f16_decode",
    "f16_decode_array",
    "f16_encode",
    "f16_encode_array",
    "fnv1a_64",
    "weights_fingerprint",
    "forward",
    "load_weights",
    "save_weights",
    "token_id",
]

WEIGHTS_MAGIC = b"EMBW"
WEIGHTS_VERSION = 1
_HEADER = struct.Struct("<4sHIHHH")

#: Seed of the stock untrained model shipped by ``default_weights``.
DEFAULT_SEED = 1337

#: Stand-in token embedded for items or queries whose text yields no tokens.
PLACEHOLDER_TOKEN = "<empty>"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a_64(data: bytes) -> int:
    """FNV-1a 64-bit hash, platform independent by construction."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def token_id(token: str, buckets: int) -> int:
    """Map a token to its hash bucket in ``[0, buckets)``."""
    if not token:
        raise EmptyInputError("token must be non-empty")
    if buckets <= 0:
        raise ValueError(f"bucket count must be positive, got {buckets}")
    return fnv1a_64(token.encode("utf-8")) % buckets


# --------------------------------------------------------------------------
# binary16 codec
#
# numpy's float32<->float16 casts implement exactly the contract needed
# here: round to nearest even, overflow to signed infinity, subnormals
# preserved.  The test suite checks them against an independent bit-level
# reference over every 16-bit pattern.
# --------------------------------------------------------------------------


def f16_encode(value: float) -> int:
    """Encode a finite fp32 value as its IEEE 754 binary16 bit pattern."""
    with np.errstate(over="ignore"):
        return int(np.float32(value).astype(np.float16).view(np.uint16))


def f16_decode(bits: int) -> float:
    """Decode an IEEE 754 binary16 bit pattern to a Python float."""
    return float(np.uint16(bits).view(np.float16))


def f16_encode_array(values: np.ndarray) -> np.ndarray:
    """Vectorized :func:`f16_encode`; returns a uint16 array."""
    with np.errstate(over="ignore"):
        return np.ascontiguousarray(values, dtype=np.float32).astype("<f2").view(np.uint16)


def f16_decode_array(bits: np.ndarray) -> np.ndarray:
    """Vectorized :func:`f16_decode`; returns a float32 array."""
    return np.ascontiguousarray(bits, dtype="<u2").view("<f2").astype(np.float32)


@dataclass
class ModelWeights:
    """Parameters of the tiny encoder, kept in fp32 for computation.

    ``token_table`` has one row per hash bucket.  ``w1``/``b1`` and
    ``w2``/``b2`` are the two dense layers.
    """

    token_table: np.ndarray  # (buckets, token_dim)
    w1: np.ndarray  # (token_dim, hidden)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden, out_dim)
    b2: np.ndarray  # (out_dim,)

    @property
    def buckets(self) -> int:
        return self.token_table.shape[0]

    @property
    def token_dim(self) -> int:
        return self.token_table.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[1]

    def parameter_groups(self) -> dict[str, np.ndarray]:
        return {
            "token_table": self.token_table,
            "w1": self.w1,
            "b1": self.b1,
            "w2": self.w2,
            "b2": self.b2,
        }

    def validate(self) -> None:
        if self.token_table.ndim != 2:
            raise DimensionMismatchError("token_table must be 2-d")
        if self.w1.shape != (self.token_dim, self.hidden):
            raise DimensionMismatchError("w1 shape inconsistent")
        if self.b1.shape != (self.hidden,):
            raise DimensionMismatchError("b1 shape inconsistent")
        if self.w2.shape != (self.hidden, self.out_dim):
            raise DimensionMismatchError("w2 shape inconsistent")
        if self.b2.shape != (self.out_dim,):
            raise DimensionMismatchError("b2 shape inconsistent")
        for name, arr in self.parameter_groups().items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in {name}")

    def copy(self) -> "ModelWeights":
        return ModelWeights(
            token_table=self.token_table.copy(),
            w1=self.w1.copy(),
            b1=self.b1.copy(),
            w2=self.w2.copy(),
            b2=self.b2.copy(),
        )


def _quantize_to_f16(arr: np.ndarray) -> np.ndarray:
    # round trip through binary16 so in-memory values match what a
    # save/load cycle would produce
    return arr.astype(np.float16).astype(np.float32)


def default_weights(
    seed: int = DEFAULT_SEED,
    buckets: int = 32768,
    token_dim: int = 128,
    hidden: int = 256,
    out_dim: int = 128,
) -> ModelWeights:
    """Seeded random initialization used as the stock untrained model.

    All parameters are rounded through binary16 at creation so that the
    in-memory model and its serialized form agree bit for bit.
    """
    rng = np.random.default_rng(seed)
    table = rng.standard_normal((buckets, token_dim), dtype=np.float32)
    w1 = rng.standard_normal((token_dim, hidden), dtype=np.float32) / np.sqrt(token_dim)
    w2 = rng.standard_normal((hidden, out_dim), dtype=np.float32) / np.sqrt(hidden)
    weights = ModelWeights(
        token_table=_quantize_to_f16(table),
        w1=_quantize_to_f16(w1.astype(np.float32)),
        b1=np.zeros(hidden, dtype=np.float32),
        w2=_quantize_to_f16(w2.astype(np.float32)),
        b2=np.zeros(out_dim, dtype=np.float32),
    )
    weights.validate()
    return weights


def forward(weights: ModelWeights, tokens: list[str]) -> np.ndarray:
    """Embed a token sequence: pool table rows, two dense layers, normalize.

    Bucket ids are pooled in sorted order, which makes the result exactly
    invariant under token permutation (mean pooling has no order anyway;
    sorting pins the floating-point summation order).
    """
    if not tokens:
        raise EmptyInputError("cannot embed an empty token sequence")
    ids = sorted(token_id(t, weights.buckets) for t in tokens)
    pooled = weights.token_table[ids].mean(axis=0, dtype=np.float32)
    hid = np.tanh(pooled @ weights.w1 + weights.b1)
    raw = hid @ weights.w2 + weights.b2
    norm = float(np.linalg.norm(raw))
    if norm < 1e-12:
        raise DegenerateVectorError("pre-normalization output has near-zero norm")
    return (raw / np.float32(norm)).astype(np.float32)


def embed_text(weights: ModelWeights, text: str) -> np.ndarray:
    """Tokenize ``text`` and embed it; empty text embeds the placeholder."""
    tokens = normalize_query(text)
    if not tokens:
        tokens = [PLACEHOLDER_TOKEN]
    return forward(weights, tokens)


def weights_fingerprint(weights: ModelWeights) -> str:
    """Digest of the serialized parameters; changes whenever the model does.

    Indexers store this next to their item hashes so that a retrained
    model invalidates previously embedded vectors.
    """
    digest = hashlib.blake2b(digest_size=8)
    for arr in weights.parameter_groups().values():
        digest.update(np.ascontiguousarray(arr, dtype=np.float32).astype("<f2").tobytes())
    return digest.hexdigest()


def save_weights(weights: ModelWeights, path) -> None:
    """Write the weight file described in the module docstring."""
    weights.validate()
    header = _HEADER.pack(
        WEIGHTS_MAGIC,
        WEIGHTS_VERSION,
        weights.buckets,
        weights.token_dim,
        weights.hidden,
        weights.out_dim,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in weights.parameter_groups().values():
            fh.write(np.ascontiguousarray(arr, dtype=np.float32).astype("<f2").tobytes())


def load_weights(path) -> ModelWeights:
    """Read a weight file, validating magic, version, dims, and length."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TruncatedFileError(f"{path}: file shorter than weight header")
    magic, version, buckets, token_dim, hidden, out_dim = _HEADER.unpack_from(blob)
    if magic != WEIGHTS_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != WEIGHTS_VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported weight version {version}")
    if min(buckets, token_dim, hidden, out_dim) <= 0:
        raise FormatError(f"{path}: non-positive dimension in header")
    counts = [
        buckets * token_dim,
        token_dim * hidden,
        hidden,
        hidden * out_dim,
        out_dim,
    ]
    expected = _HEADER.size + 2 * sum(counts)
    if len(blob) < expected:
        raise TruncatedFileError(
            f"{path}: expected {expected} bytes, found {len(blob)}"
        )
    if len(blob) > expected:
        raise FormatError(f"{path}: trailing data after parameters")
    flat = f16_decode_array(np.frombuffer(blob, dtype="<u2", offset=_HEADER.size))
    offsets = np.cumsum([0] + counts)
    token_table = flat[offsets[0] : offsets[1]].reshape(buckets, token_dim)
    w1 = flat[offsets[1] : offsets[2]].reshape(token_dim, hidden)
    b1 = flat[offsets[2] : offsets[3]]
    w2 = flat[offsets[3] : offsets[4]].reshape(hidden, out_dim)
    b2 = flat[offsets[4] : offsets[5]]
    weights = ModelWeights(token_table.copy(), w1.copy(), b1.copy(), w2.copy(), b2.copy())
    weights.validate()
    return weights
