"""Labeled sentence datasets: loading, cleaning, relabeling, filtering, splitting.

A dataset file is UTF-8 JSON-lines: one flat object per line with fields
``id`` (optional string), ``text`` (string) and ``label`` (string); unknown
fields are ignored.  All operations here are pure functions over immutable
inputs, so datasets can be shared read-only across concurrent tasks.
"""
from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .seeding import child_rng

logger = logging.getLogger(__name__)

PRIMARY = "primary"
AUXILIARY = "auxiliary"
MIXED = "mixed"

_SENTENCE_SOURCES = (PRIMARY, AUXILIARY)
_DATASET_SOURCES = (PRIMARY, AUXILIARY, MIXED)


class DataFormatError(ValueError):
    """Malformed input file or a record that violates a dataset invariant."""


@dataclass(frozen=True)
class Sentence:
    """One labeled text unit with a stable id and a provenance tag."""

    id: str
    text: str
    label: str
    source: str = PRIMARY


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of sentences plus its label catalog.

    Iteration order is insertion order and the catalog lists distinct
    labels in first-appearance order; both are deterministic.
    """

    sentences: tuple[Sentence, ...]
    labels: tuple[str, ...]
    source: str

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def by_label(self) -> dict[str, list[Sentence]]:
        """Class-membership map, catalog order, members in dataset order."""
        groups: dict[str, list[Sentence]] = {label: [] for label in self.labels}
        for sentence in self.sentences:
            groups[sentence.label].append(sentence)
        return groups

    def by_id(self) -> dict[str, Sentence]:
        return {s.id: s for s in self.sentences}


def make_dataset(sentences: Iterable[Sentence], source: str) -> Dataset:
    """Build a dataset, deriving the catalog and checking id uniqueness."""
    if source not in _DATASET_SOURCES:
        raise DataFormatError(f"unknown dataset source tag {source!r}")
    sentences = tuple(sentences)
    seen_ids: set[str] = set()
    labels: list[str] = []
    for s in sentences:
        if s.id in seen_ids:
            raise DataFormatError(f"duplicate sentence id {s.id!r}")
        seen_ids.add(s.id)
        if s.label not in labels:
            labels.append(s.label)
    return Dataset(sentences=sentences, labels=tuple(labels), source=source)


def normalize(text: str) -> str:
    """Lowercase, strip, and collapse internal whitespace runs to one space."""
    return " ".join(text.lower().split())


def load_dataset(path: str | Path, source: str) -> Dataset:
    """Read a JSON-lines dataset file.

    Ids come from the record's ``id`` field when present, otherwise from
    the line number prefixed with the source tag.  Raises DataFormatError
    naming the offending line for malformed records, duplicate explicit
    ids, or an empty file.
    """
    if source not in _SENTENCE_SOURCES:
        raise DataFormatError(f"source tag must be one of {_SENTENCE_SOURCES}, got {source!r}")
    path = Path(path)
    sentences: list[Sentence] = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON record ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DataFormatError(f"{path}:{lineno}: record is not an object")
            text = record.get("text")
            if not isinstance(text, str):
                raise DataFormatError(f"{path}:{lineno}: missing or non-string 'text'")
            if not normalize(text):
                raise DataFormatError(f"{path}:{lineno}: text is empty after normalization")
            label = record.get("label")
            if not isinstance(label, str) or not label:
                raise DataFormatError(f"{path}:{lineno}: missing or empty 'label'")
            sid = record.get("id")
            if sid is None:
                sid = f"{source}-{lineno:06d}"
            elif not isinstance(sid, str) or not sid:
                raise DataFormatError(f"{path}:{lineno}: 'id' must be a non-empty string")
            if sid in seen_ids:
                raise DataFormatError(f"{path}:{lineno}: duplicate sentence id {sid!r}")
            seen_ids.add(sid)
            sentences.append(Sentence(id=sid, text=text, label=label, source=source))
    if not sentences:
        raise DataFormatError(f"{path}: no records found")
    return make_dataset(sentences, source)


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset back out in the JSON-lines record format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for s in dataset:
            record = {"id": s.id, "text": s.text, "label": s.label}
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_merge_map(path: str | Path) -> dict[str, str]:
    """Read a label-merge mapping file: JSON-lines with ``from``/``to`` fields."""
    path = Path(path)
    mapping: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON record ({exc.msg})") from exc
            src = record.get("from") if isinstance(record, dict) else None
            dst = record.get("to") if isinstance(record, dict) else None
            if not isinstance(src, str) or not isinstance(dst, str) or not dst:
                raise DataFormatError(f"{path}:{lineno}: expected string 'from' and non-empty 'to'")
            if src in mapping and mapping[src] != dst:
                raise DataFormatError(f"{path}:{lineno}: conflicting mapping for {src!r}")
            mapping[src] = dst
    return mapping


def deduplicate(dataset: Dataset) -> Dataset:
    """Drop repeated (normalized text, label) pairs, keeping first occurrences.

    Identical text under different labels is kept: such pairs are distinct
    training signal.  Idempotent and order-preserving on survivors.
    """
    seen: set[tuple[str, str]] = set()
    survivors: list[Sentence] = []
    for s in dataset:
        key = (normalize(s.text), s.label)
        if key in seen:
            continue
        seen.add(key)
        survivors.append(s)
    return make_dataset(survivors, dataset.source)


def merge_labels(dataset: Dataset, mapping: Mapping[str, str]) -> Dataset:
    """Relabel sentences through an old-label -> canonical-label mapping.

    Unmapped labels pass through unchanged; sentence count is preserved
    and the catalog is rebuilt from the relabeled sentences.
    """
    for old, new in mapping.items():
        if not new:
            raise DataFormatError(f"merge mapping for {old!r} has an empty target label")
    relabeled = [
        Sentence(id=s.id, text=s.text, label=mapping.get(s.label, s.label), source=s.source)
        for s in dataset
    ]
    return make_dataset(relabeled, dataset.source)


def filter_min_class_size(dataset: Dataset, min_count: int) -> Dataset:
    """Remove every class with fewer than ``min_count`` member sentences."""
    if min_count < 1:
        raise DataFormatError(f"min_count must be >= 1, got {min_count}")
    counts = Counter(s.label for s in dataset)
    survivors = [s for s in dataset if counts[s.label] >= min_count]
    return make_dataset(survivors, dataset.source)


def class_histogram(dataset: Dataset) -> dict[str, int]:
    """Per-class sentence counts, in catalog order."""
    counts = {label: 0 for label in dataset.labels}
    for s in dataset:
        counts[s.label] += 1
    return counts


@dataclass(frozen=True)
class SplitBundle:
    """Disjoint train/dev/test datasets whose union is the split input."""

    train: Dataset
    dev: Dataset
    test: Dataset


def _split_sizes(n: int, ratio: tuple[int, int, int]) -> tuple[int, int, int]:
    """Largest-remainder allocation of n members over the ratio weights.

    Remainder ties are broken train > dev > test, which for a 2:1:1 ratio
    matches assigning members cyclically train, dev, test, train.
    """
    total = sum(ratio)
    quotas = [n * w / total for w in ratio]
    sizes = [int(q) for q in quotas]
    remainders = [q - s for q, s in zip(quotas, sizes)]
    leftover = n - sum(sizes)
    # stable sort: descending remainder, position order breaks ties
    order = sorted(range(3), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes[0], sizes[1], sizes[2]


def stratified_split(
    dataset: Dataset, ratio: tuple[int, int, int] = (2, 1, 1), seed: int = 0
) -> SplitBundle:
    """Per-class seeded shuffle then 2:1:1-style allocation into three splits.

    Every class needs at least three members (run filter_min_class_size
    first); the first three shuffled members go one to each split so every
    class appears everywhere, and the rest fill the largest-remainder
    quotas.  Deterministic for a fixed seed regardless of class order.
    """
    if len(ratio) != 3 or any(w < 1 for w in ratio):
        raise DataFormatError(f"ratio must be three positive weights, got {ratio!r}")
    groups = dataset.by_label()
    for label, members in groups.items():
        if len(members) < 3:
            raise DataFormatError(
                f"class {label!r} has {len(members)} member(s); need >= 3 to split"
            )
    parts: dict[str, list[Sentence]] = {"train": [], "dev": [], "test": []}
    for label in dataset.labels:
        members = groups[label]
        rng = child_rng(seed, "split", label)
        shuffled = [members[i] for i in rng.permutation(len(members))]
        n_train, n_dev, n_test = _split_sizes(len(members), ratio)
        parts["train"].append(shuffled[0])
        parts["dev"].append(shuffled[1])
        parts["test"].append(shuffled[2])
        rest = shuffled[3:]
        parts["train"].extend(rest[: n_train - 1])
        parts["dev"].extend(rest[n_train - 1 : n_train - 1 + n_dev - 1])
        parts["test"].extend(rest[n_train - 1 + n_dev - 1 :])
    # flatten per-class contributions back into catalog order
    def build(rows: list[Sentence]) -> Dataset:
        return make_dataset(rows, dataset.source)

    return SplitBundle(
        train=build(parts["train"]), dev=build(parts["dev"]), test=build(parts["test"])
    )


def write_split_bundle(
    bundle: SplitBundle,
    stem: str | Path,
    seed: int,
    ratio: tuple[int, int, int] = (2, 1, 1),
) -> dict:
    """Write ``<stem>.train/.dev/.test`` plus a JSON manifest; returns the manifest."""
    stem = Path(stem)
    write_dataset(bundle.train, stem.with_suffix(".train"))
    write_dataset(bundle.dev, stem.with_suffix(".dev"))
    write_dataset(bundle.test, stem.with_suffix(".test"))
    manifest = {
        "seed": seed,
        "ratio": list(ratio),
        "counts": {
            name: class_histogram(part)
            for name, part in (("train", bundle.train), ("dev", bundle.dev), ("test", bundle.test))
        },
        "sizes": {
            "train": len(bundle.train),
            "dev": len(bundle.dev),
            "test": len(bundle.test),
        },
    }
    manifest_path = stem.with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def load_split_bundle(stem: str | Path, source: str = PRIMARY) -> SplitBundle:
    """Load the three datasets written by write_split_bundle."""
    stem = Path(stem)
    return SplitBundle(
        train=load_dataset(stem.with_suffix(".train"), source),
        dev=load_dataset(stem.with_suffix(".dev"), source),
        test=load_dataset(stem.with_suffix(".test"), source),
    )


def dataset_fingerprint(dataset: Dataset) -> str:
    """Stable content hash used in manifests and model headers."""
    digest = hashlib.sha256()
    digest.update(dataset.source.encode("utf-8"))
    for label in dataset.labels:
        digest.update(b"\x00" + label.encode("utf-8"))
    for s in dataset:
        digest.update(
            b"\x01" + json.dumps([s.id, s.text, s.label, s.source], ensure_ascii=False).encode("utf-8")
        )
    return digest.hexdigest()
