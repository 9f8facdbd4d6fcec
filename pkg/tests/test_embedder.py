import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from everysearch.embedder import (
    ModelWeights,
    default_weights,
    embed_text,
    forward,
    load_weights,
    save_weights,
    token_id,
)
from everysearch.errors import (
    DegenerateVectorError,
    EmptyInputError,
    FormatError,
    TruncatedFileError,
    UnsupportedVersionError,
)


def ref_fnv1a(data: bytes) -> int:
    return reduce(
        lambda h, b: ((h ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF,
        data,
        0xCBF29CE484222325,
    )


class TestTokenId:
    def test_modulo_one(self):
        assert token_id("x", 1) == 0

    def test_deterministic(self):
        assert token_id("open", 32768) == token_id("open", 32768)

    def test_known_hashes(self):
        # frozen from the reduce-based reference implementation
        assert ref_fnv1a(b"open") == 0xF84F97B4633670E9
        assert ref_fnv1a(b"close") == 0x9EC2699513C0F9C3
        assert token_id("open", 32768) == 0xF84F97B4633670E9 % 32768 == 28905
        assert token_id("close", 32768) == 31171
        assert token_id("open", 32768) != token_id("close", 32768)

    @given(st.text(min_size=1, max_size=20), st.integers(min_value=1, max_value=100000))
    def test_matches_reference(self, token, buckets):
        assert token_id(token, buckets) == ref_fnv1a(token.encode("utf-8")) % buckets

    def test_empty_token_rejected(self):
        with pytest.raises(EmptyInputError):
            token_id("", 16)

    def test_bad_bucket_count(self):
        with pytest.raises(ValueError):
            token_id("a", 0)


def ref_forward(w: ModelWeights, tokens: list[str]) -> list[float]:
    """Straight-line float64 evaluation with plain Python loops."""
    ids = sorted(token_id(t, w.buckets) for t in tokens)
    pooled = [
        sum(float(w.token_table[i, j]) for i in ids) / len(ids) for j in range(w.token_dim)
    ]
    hid = [
        math.tanh(
            sum(pooled[i] * float(w.w1[i, j]) for i in range(w.token_dim)) + float(w.b1[j])
        )
        for j in range(w.hidden)
    ]
    raw = [
        sum(hid[i] * float(w.w2[i, j]) for i in range(w.hidden)) + float(w.b2[j])
        for j in range(w.out_dim)
    ]
    norm = math.sqrt(sum(v * v for v in raw))
    return [v / norm for v in raw]


class TestForward:
    def test_matches_reference_chain(self, tiny_weights):
        got = forward(tiny_weights, ["open", "file"])
        expected = ref_forward(tiny_weights, ["open", "file"])
        assert np.allclose(got, expected, atol=1e-5)

    def test_unit_norm_and_shape(self, tiny_weights):
        vec = forward(tiny_weights, ["alpha", "beta", "gamma"])
        assert vec.shape == (tiny_weights.out_dim,)
        assert vec.dtype == np.float32
        assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-3
        assert np.all(np.isfinite(vec))

    def test_deterministic_bitwise(self, tiny_weights):
        a = forward(tiny_weights, ["open", "file"])
        b = forward(tiny_weights, ["open", "file"])
        assert np.array_equal(a, b)

    def test_order_invariant_exactly(self, tiny_weights):
        tokens = ["alpha", "beta", "gamma", "delta"]
        a = forward(tiny_weights, tokens)
        b = forward(tiny_weights, list(reversed(tokens)))
        assert np.array_equal(a, b)

    def test_empty_tokens_rejected(self, tiny_weights):
        with pytest.raises(EmptyInputError):
            forward(tiny_weights, [])

    def test_zero_row_zero_bias_degenerates(self):
        w = ModelWeights(
            token_table=np.zeros((8, 4), dtype=np.float32),
            w1=np.eye(4, dtype=np.float32),
            b1=np.zeros(4, dtype=np.float32),
            w2=np.eye(4, dtype=np.float32),
            b2=np.zeros(4, dtype=np.float32),
        )
        with pytest.raises(DegenerateVectorError):
            forward(w, ["anything"])

    def test_bias_only_path_gives_basis_vector(self):
        e1 = np.zeros(4, dtype=np.float32)
        e1[0] = 1.0
        w = ModelWeights(
            token_table=np.zeros((8, 4), dtype=np.float32),
            w1=np.zeros((4, 4), dtype=np.float32),
            b1=np.zeros(4, dtype=np.float32),
            w2=np.zeros((4, 4), dtype=np.float32),
            b2=e1.copy(),
        )
        assert np.array_equal(forward(w, ["token"]), e1)
        assert np.array_equal(forward(w, ["other"]), e1)


class TestEmbedText:
    def test_composition(self, tiny_weights):
        assert np.array_equal(
            embed_text(tiny_weights, "openFile"), forward(tiny_weights, ["open", "file"])
        )

    def test_same_tokens_same_embedding(self, tiny_weights):
        assert np.array_equal(
            embed_text(tiny_weights, "open_file"), embed_text(tiny_weights, "openFile")
        )

    def test_self_similarity(self, tiny_weights):
        a = embed_text(tiny_weights, "a")
        assert abs(float(a @ a) - 1.0) < 1e-6

    def test_empty_text_uses_placeholder(self, tiny_weights):
        assert np.array_equal(
            embed_text(tiny_weights, ""), embed_text(tiny_weights, "!!!")
        )

    @given(st.text(max_size=30))
    @settings(max_examples=50, deadline=None)
    def test_always_unit_norm(self, text):
        w = default_weights(seed=3, buckets=64, token_dim=8, hidden=8, out_dim=8)
        vec = embed_text(w, text)
        assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-3


class TestWeightsIO:
    def test_roundtrip_bitwise(self, tiny_weights, tmp_path):
        path = tmp_path / "w.embw"
        save_weights(tiny_weights, path)
        loaded = load_weights(path)
        for name, arr in tiny_weights.parameter_groups().items():
            got = loaded.parameter_groups()[name]
            assert np.array_equal(
                arr.astype(np.float16).view(np.uint16), got.astype(np.float16).view(np.uint16)
            ), name
        # saving the loaded copy reproduces the file byte for byte
        path2 = tmp_path / "w2.embw"
        save_weights(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_wrong_magic(self, tiny_weights, tmp_path):
        path = tmp_path / "w.embw"
        save_weights(tiny_weights, path)
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(FormatError):
            load_weights(path)

    def test_truncated(self, tiny_weights, tmp_path):
        path = tmp_path / "w.embw"
        save_weights(tiny_weights, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-2])
        with pytest.raises(TruncatedFileError):
            load_weights(path)

    def test_trailing_garbage(self, tiny_weights, tmp_path):
        path = tmp_path / "w.embw"
        save_weights(tiny_weights, path)
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError):
            load_weights(path)

    def test_unsupported_version(self, tiny_weights, tmp_path):
        path = tmp_path / "w.embw"
        save_weights(tiny_weights, path)
        blob = bytearray(path.read_bytes())
        blob[4:6] = (99).to_bytes(2, "little")
        path.write_bytes(bytes(blob))
        with pytest.raises(UnsupportedVersionError):
            load_weights(path)

    def test_default_weights_reproducible(self):
        a = default_weights(seed=11, buckets=32, token_dim=4, hidden=4, out_dim=4)
        b = default_weights(seed=11, buckets=32, token_dim=4, hidden=4, out_dim=4)
        for name, arr in a.parameter_groups().items():
            assert np.array_equal(arr, b.parameter_groups()[name]), name
