from __future__ import annotations

import json
import math

import numpy as np
import pytest

from conftest import vector_encoder
from simaug.corpus import PRIMARY, DataFormatError, Sentence, make_dataset
from simaug.encoder import (
    EncodingError,
    cosine,
    encode,
    fit_hashed_encoder,
    load_embedding_file,
    write_embedding_file,
)


def _corpus(texts):
    sentences = [
        Sentence(id=f"s{i}", text=t, label="A", source=PRIMARY) for i, t in enumerate(texts)
    ]
    return make_dataset(sentences, PRIMARY)


class TestFitHashedEncoder:
    def test_single_sentence_idf_is_one(self):
        # smoothed idf with N = df = 1: ln(2/2) + 1 = 1.0 for every bucket
        enc = fit_hashed_encoder(_corpus(["alpha beta gamma"]), dimension=64, ngram_range=(1, 1))
        assert enc.idf
        assert all(value == 1.0 for value in enc.idf.values())

    def test_fit_is_deterministic(self):
        corpus = _corpus(["alpha beta", "beta gamma", "gamma delta epsilon"])
        first = fit_hashed_encoder(corpus, dimension=128)
        second = fit_hashed_encoder(corpus, dimension=128)
        assert first.idf == second.idf
        assert first.fingerprint() == second.fingerprint()

    def test_dimension_respected(self):
        corpus = _corpus(["alpha beta gamma", "delta epsilon"])
        enc = fit_hashed_encoder(corpus, dimension=64)
        for sentence in corpus:
            assert encode(enc, sentence).shape == (64,)

    def test_preconditions(self):
        corpus = _corpus(["alpha beta"])
        with pytest.raises(DataFormatError):
            fit_hashed_encoder(corpus, dimension=32)
        with pytest.raises(DataFormatError):
            fit_hashed_encoder(corpus, dimension=64, ngram_range=(0, 2))
        with pytest.raises(DataFormatError):
            fit_hashed_encoder(corpus, dimension=64, ngram_range=(2, 4))
        with pytest.raises(DataFormatError):
            fit_hashed_encoder(make_dataset([], PRIMARY), dimension=64)


class TestEncode:
    def test_unit_norm(self):
        corpus = _corpus(["alpha beta gamma", "beta beta beta", "delta"])
        enc = fit_hashed_encoder(corpus, dimension=64)
        for sentence in corpus:
            assert abs(np.linalg.norm(encode(enc, sentence)) - 1.0) < 1e-9

    def test_identical_normalized_text_identical_vectors(self):
        enc = fit_hashed_encoder(_corpus(["alpha beta"]), dimension=64)
        a = Sentence(id="x", text="Alpha  BETA", label="A")
        b = Sentence(id="y", text="alpha beta", label="B")
        assert np.array_equal(encode(enc, a), encode(enc, b))

    def test_unseen_ngrams_still_encode_via_default_idf(self):
        enc = fit_hashed_encoder(_corpus(["alpha beta"]), dimension=64, ngram_range=(1, 1))
        unseen = Sentence(id="u", text="omicron sigma tau", label="A")
        vec = encode(enc, unseen)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-9)

    def test_zero_vector_reported(self):
        # bigram-only encoder cannot featurize a one-token sentence
        enc = fit_hashed_encoder(_corpus(["alpha beta gamma"]), dimension=64, ngram_range=(2, 2))
        with pytest.raises(EncodingError, match="all-zero"):
            encode(enc, Sentence(id="solo", text="alpha", label="A"))

    def test_file_backed_missing_id(self):
        enc = vector_encoder({"known": np.array([1.0, 0.0])})
        with pytest.raises(EncodingError, match="'ghost'"):
            encode(enc, Sentence(id="ghost", text="whatever", label="A"))

    def test_file_backed_normalizes(self):
        enc = vector_encoder({"a": np.array([3.0, 4.0])})
        vec = encode(enc, Sentence(id="a", text="t", label="A"))
        assert np.allclose(vec, [0.6, 0.8])


class TestCosine:
    def test_self_similarity_is_one(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            v = rng.normal(size=16)
            v /= np.linalg.norm(v)
            assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_hand_computed_45_degrees(self):
        a = np.array([1.0, 0.0])
        b = np.array([1.0, 1.0]) / math.sqrt(2.0)
        assert cosine(a, b) == pytest.approx(0.70710678, abs=1e-8)

    def test_symmetry_and_bound(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a = rng.normal(size=8)
            b = rng.normal(size=8)
            assert cosine(a, b) == cosine(b, a)
            assert abs(cosine(a, b)) <= 1.0 + 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DataFormatError):
            cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))

    def test_zero_vector(self):
        with pytest.raises(EncodingError):
            cosine(np.zeros(3), np.array([1.0, 0.0, 0.0]))


class TestEmbeddingFile:
    def test_load_two_ids(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text(
            '{"id": "a", "vector": [1.0, 0.0, 0.0, 0.0]}\n'
            '{"id": "b", "vector": [0.0, 1.0, 0.0, 0.0]}\n',
            encoding="utf-8",
        )
        enc = load_embedding_file(path, expected_dimension=4)
        assert set(enc.vectors) == {"a", "b"}
        assert enc.dimension == 4

    def test_inconsistent_dimension_names_id(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text(
            '{"id": "a", "vector": [1.0, 0.0, 0.0, 0.0]}\n'
            '{"id": "bad", "vector": [1.0, 0.0, 0.0]}\n',
            encoding="utf-8",
        )
        with pytest.raises(DataFormatError, match="'bad'"):
            load_embedding_file(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text('{"id": "a", "vector": [1.0, NaN]}\n', encoding="utf-8")
        with pytest.raises(DataFormatError, match="non-finite"):
            load_embedding_file(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        path.write_text(
            '{"id": "a", "vector": [1.0, 0.0]}\n{"id": "a", "vector": [0.0, 1.0]}\n',
            encoding="utf-8",
        )
        with pytest.raises(DataFormatError, match="duplicate id"):
            load_embedding_file(path)

    def test_round_trip_bit_exact(self, tmp_path):
        # values parsed from <= 9 significant digits re-render identically
        path = tmp_path / "emb.jsonl"
        write_embedding_file(
            path, {"a": [0.707106781, -1.5, 3e-07], "b": [1.0, 2.0, 0.333333333]}
        )
        enc = load_embedding_file(path)
        again = tmp_path / "again.jsonl"
        write_embedding_file(again, {sid: vec.tolist() for sid, vec in enc.vectors.items()})
        assert path.read_bytes() == again.read_bytes()
        reloaded = load_embedding_file(again)
        for sid, vec in enc.vectors.items():
            assert np.array_equal(vec, reloaded.vectors[sid])

    def test_written_floats_have_nine_significant_digits(self, tmp_path):
        path = tmp_path / "emb.jsonl"
        write_embedding_file(path, {"a": [math.pi, 1.0 / 3.0]})
        record = json.loads(path.read_text(encoding="utf-8"))
        assert record["vector"][0] == pytest.approx(math.pi, rel=1e-8)
        assert record["vector"][0] != math.pi  # truncated to 9 digits


def test_fingerprint_distinguishes_encoders():
    corpus_a = _corpus(["alpha beta gamma"])
    corpus_b = _corpus(["alpha beta delta"])
    fp_a = fit_hashed_encoder(corpus_a, dimension=64).fingerprint()
    fp_b = fit_hashed_encoder(corpus_b, dimension=64).fingerprint()
    assert fp_a != fp_b
