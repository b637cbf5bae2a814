"""Deterministic derivation of child random generators.

Every randomized operation in the toolkit derives its generator from a
master seed plus a stable namespace (strings, class names, ids).  Child
streams are therefore independent of iteration order and of how work is
scheduled across parallel tasks, and identical across machines.
"""
from __future__ import annotations

import hashlib

import numpy as np

_WORD = 2**64


def stable_words(*parts: int | str) -> list[int]:
    """Map a mixed tuple of ints and strings to uint64 seed words."""
    words = []
    for part in parts:
        if isinstance(part, bool):  # bool is an int subclass; be explicit
            words.append(int(part))
        elif isinstance(part, int):
            words.append(part % _WORD)
        else:
            digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
            words.append(int.from_bytes(digest, "little"))
    return words


def child_rng(*parts: int | str) -> np.random.Generator:
    """A generator seeded from (master seed, namespace...) material."""
    return np.random.default_rng(stable_words(*parts))
