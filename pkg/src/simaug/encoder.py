"""Sentence encoders: deterministic hashed TF-IDF and file-backed vectors.

Both encoder kinds produce unit-L2 vectors of a fixed dimension and are
interchangeable downstream; selection and training only ever see the
``encode`` interface.  The file-backed kind serves externally computed
embeddings (e.g. from a transformer) keyed by sentence id.
"""
from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import DataFormatError, Dataset, Sentence, normalize

HASHED_TFIDF = "hashed_tfidf"
FILE_BACKED = "file_backed"

# Published hash key: augmentation plans are only reproducible across
# machines because every build buckets n-grams with this exact key.
FEATURE_HASH_KEY = b"simaug-feature-hash-v1"

# idf for buckets never seen at fit time; keeps out-of-vocabulary text
# from collapsing to a zero vector.
UNSEEN_BUCKET_IDF = 1.0


class EncodingError(ValueError):
    """A sentence that cannot be encoded (zero vector or unknown id)."""


def _bucket(ngram: str, dimension: int) -> int:
    digest = hashlib.blake2b(
        ngram.encode("utf-8"), digest_size=8, key=FEATURE_HASH_KEY
    ).digest()
    return int.from_bytes(digest, "little") % dimension


def _ngrams(text: str, lo: int, hi: int) -> list[str]:
    tokens = normalize(text).split()
    grams: list[str] = []
    for n in range(lo, hi + 1):
        grams.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return grams


@dataclass(frozen=True)
class Encoder:
    """A fitted featurizer mapping text (or ids) to unit vectors."""

    kind: str
    dimension: int
    ngram_range: tuple[int, int] = (1, 2)
    idf: dict[int, float] = field(default_factory=dict)
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        header = {
            "kind": self.kind,
            "dimension": self.dimension,
            "ngram_range": list(self.ngram_range),
            "hash_key": FEATURE_HASH_KEY.decode("ascii"),
        }
        digest.update(json.dumps(header, sort_keys=True).encode("utf-8"))
        if self.kind == HASHED_TFIDF:
            for bucket in sorted(self.idf):
                digest.update(f"{bucket}:{self.idf[bucket]!r}".encode("ascii"))
        else:
            for sid in sorted(self.vectors):
                digest.update(sid.encode("utf-8"))
                digest.update(self.vectors[sid].astype("<f8").tobytes())
        return digest.hexdigest()


def fit_hashed_encoder(
    corpus: Dataset, dimension: int = 512, ngram_range: tuple[int, int] = (1, 2)
) -> Encoder:
    """Fit bucket idf weights over the corpus.

    N-grams are hashed into [0, dimension) with the published key; each
    bucket gets smoothed idf = ln((1+N)/(1+df)) + 1 where df counts the
    sentences that hit the bucket.  Fully deterministic.
    """
    lo, hi = ngram_range
    if dimension < 64:
        raise DataFormatError(f"encoder dimension must be >= 64, got {dimension}")
    if not (1 <= lo <= hi <= 3):
        raise DataFormatError(f"ngram_range must satisfy 1 <= lo <= hi <= 3, got {ngram_range}")
    if len(corpus) == 0:
        raise DataFormatError("cannot fit an encoder on an empty corpus")
    df: Counter[int] = Counter()
    for sentence in corpus:
        buckets = {_bucket(g, dimension) for g in _ngrams(sentence.text, lo, hi)}
        df.update(buckets)
    n_docs = len(corpus)
    idf = {bucket: math.log((1 + n_docs) / (1 + count)) + 1.0 for bucket, count in df.items()}
    return Encoder(kind=HASHED_TFIDF, dimension=dimension, ngram_range=(lo, hi), idf=idf)


def encode(encoder: Encoder, sentence: Sentence) -> np.ndarray:
    """Encode one sentence to a unit-L2 float64 vector.

    Raises EncodingError for sentences whose features are all zero and,
    for file-backed encoders, for ids missing from the vector table.
    """
    if encoder.kind == HASHED_TFIDF:
        counts: Counter[int] = Counter(
            _bucket(g, encoder.dimension) for g in _ngrams(sentence.text, *encoder.ngram_range)
        )
        vec = np.zeros(encoder.dimension, dtype=np.float64)
        for bucket, tf in counts.items():
            vec[bucket] = tf * encoder.idf.get(bucket, UNSEEN_BUCKET_IDF)
    elif encoder.kind == FILE_BACKED:
        stored = encoder.vectors.get(sentence.id)
        if stored is None:
            raise EncodingError(f"sentence id {sentence.id!r} not present in embedding table")
        vec = stored.astype(np.float64, copy=True)
    else:
        raise EncodingError(f"unknown encoder kind {encoder.kind!r}")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise EncodingError(f"sentence {sentence.id!r} maps to an all-zero vector")
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity: dot(a, b) / (|a| * |b|); equals the dot product for unit vectors."""
    if a.shape != b.shape:
        raise DataFormatError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise EncodingError("cosine of a zero vector is undefined")
    return float(np.dot(a, b) / (na * nb))


def load_embedding_file(path: str | Path, expected_dimension: int | None = None) -> Encoder:
    """Load a file-backed encoder from JSON-lines ``{"id": ..., "vector": [...]}``.

    Validates uniform dimension, finite components, and unique ids;
    errors name the offending id or line.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dimension = expected_dimension
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON record ({exc.msg})") from exc
            sid = record.get("id") if isinstance(record, dict) else None
            raw = record.get("vector") if isinstance(record, dict) else None
            if not isinstance(sid, str) or not sid:
                raise DataFormatError(f"{path}:{lineno}: missing or empty 'id'")
            if not isinstance(raw, list) or not raw:
                raise DataFormatError(f"{path}:{lineno}: 'vector' must be a non-empty array (id {sid!r})")
            vec = np.asarray(raw, dtype=np.float64)
            if dimension is None:
                dimension = int(vec.shape[0])
            elif vec.shape[0] != dimension:
                raise DataFormatError(
                    f"{path}:{lineno}: vector for id {sid!r} has dimension "
                    f"{vec.shape[0]}, expected {dimension}"
                )
            if not np.all(np.isfinite(vec)):
                raise DataFormatError(f"{path}:{lineno}: non-finite component in vector for id {sid!r}")
            if sid in vectors:
                raise DataFormatError(f"{path}:{lineno}: duplicate id {sid!r}")
            vectors[sid] = vec
    if not vectors:
        raise DataFormatError(f"{path}: no embedding records found")
    assert dimension is not None
    return Encoder(kind=FILE_BACKED, dimension=dimension, vectors=vectors)


def write_embedding_file(path: str | Path, vectors: dict[str, Iterable[float]]) -> None:
    """Write an embedding table; components carry 9 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for sid, vec in vectors.items():
            rendered = ", ".join(f"{float(x):.9g}" for x in vec)
            handle.write(f'{{"id": {json.dumps(sid)}, "vector": [{rendered}]}}\n')
