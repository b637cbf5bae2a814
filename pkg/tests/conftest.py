from __future__ import annotations

import numpy as np
import pytest

from simaug.corpus import AUXILIARY, PRIMARY, Dataset, Sentence, make_dataset
from simaug.encoder import FILE_BACKED, Encoder


def dataset_from_pairs(pairs, source=PRIMARY) -> Dataset:
    """Build a dataset from (id, label) pairs; texts are unique per id."""
    sentences = [
        Sentence(id=sid, text=f"text of {sid}", label=label, source=source)
        for sid, label in pairs
    ]
    return make_dataset(sentences, source)


def vector_encoder(vectors: dict[str, np.ndarray]) -> Encoder:
    """File-backed encoder serving handcrafted vectors."""
    dims = {v.shape[0] for v in vectors.values()}
    assert len(dims) == 1
    return Encoder(
        kind=FILE_BACKED,
        dimension=dims.pop(),
        vectors={k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()},
    )


@pytest.fixture
def tiny_dataset() -> Dataset:
    rows = [
        ("s1", "alpha attack uses sudo caching", "A"),
        ("s2", "beta attack swaps tokens fast", "A"),
        ("s3", "gamma attack dumps credentials", "B"),
        ("s4", "delta attack moves laterally", "B"),
        ("s5", "epsilon attack exfiltrates data", "C"),
        ("s6", "zeta attack encrypts the disk", "C"),
    ]
    return make_dataset(
        [Sentence(id=i, text=t, label=l, source=PRIMARY) for i, t, l in rows], PRIMARY
    )


def make_aux(pairs) -> Dataset:
    return dataset_from_pairs(pairs, source=AUXILIARY)
