"""Synthetic desk-scale corpora with a controllable primary/auxiliary style gap.

Each class owns two small signal vocabularies: concrete "report" terms
that appear in primary sentences, and abstract "description" terms that
only ever appear in auxiliary sentences.  A primary sentence mixes its
class's concrete terms with a shared report-style vocabulary; an
auxiliary sentence draws its signal from a mixture of the class's
concrete terms (the transferable part), its abstract terms, and, with
some probability, a *related common class's* concrete terms (the way
real descriptions cite popular techniques, which is exactly what makes
naive pooling hurt the frequent classes).  Style tokens come from a
disjoint description-style vocabulary with probability ``vocab_shift``.

Setting all three shift knobs (``vocab_shift``, ``abstract_share``,
``cross_reference``) to zero and aligning the signal ranges makes the
auxiliary pool follow the primary generative process.

The default histogram mimics a heavily imbalanced technique-tagging set:
a long tail of three-sentence classes plus a couple of sub-three classes
that the preparation filter removes.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .corpus import AUXILIARY, PRIMARY, DataFormatError, Dataset, Sentence, make_dataset, normalize
from .seeding import child_rng

DEFAULT_CLASS_SIZES = (
    1, 2,  # removed by the min-count filter during preparation
    3, 3, 3, 3, 3, 3, 3, 3,
    6, 8, 10, 12,
    20, 24, 28, 32,
    60, 80, 100, 120,
)


@dataclass(frozen=True)
class SynthSpec:
    class_sizes: tuple[int, ...] = DEFAULT_CLASS_SIZES
    aux_per_class: int = 25
    vocab_shift: float = 1.0  # P(style token drawn from the description vocabulary)
    abstract_share: float = 0.35  # P(own-class signal uses abstract, not concrete terms)
    cross_reference: float = 0.5  # P(signal token cites the related common class)
    signal_tokens_per_class: int = 4
    style_vocab_size: int = 40
    min_len: int = 9
    max_len: int = 14
    primary_signal_range: tuple[int, int] = (2, 4)
    aux_signal_range: tuple[int, int] = (1, 6)
    signal_noise: float = 0.12  # P(primary signal token comes from another class)

    def validate(self) -> None:
        if len(self.class_sizes) < 5:
            raise DataFormatError("need at least 5 classes")
        if any(size < 1 for size in self.class_sizes):
            raise DataFormatError("class sizes must be positive")
        for name in ("vocab_shift", "abstract_share", "cross_reference", "signal_noise"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DataFormatError(f"{name} must lie in [0, 1], got {value}")
        if self.aux_per_class < 1:
            raise DataFormatError("aux_per_class must be positive")
        if not 1 <= self.min_len <= self.max_len:
            raise DataFormatError("need 1 <= min_len <= max_len")


def _labels(n: int) -> list[str]:
    return [f"T{1001 + i}" for i in range(n)]


def _concrete_vocab(label: str, size: int) -> list[str]:
    return [f"{label.lower()}p{j}" for j in range(size)]


def _abstract_vocab(label: str, size: int) -> list[str]:
    return [f"{label.lower()}a{j}" for j in range(size)]


def _pick(rng, vocab: list[str]) -> str:
    return vocab[int(rng.integers(0, len(vocab)))]


def _primary_tokens(rng, spec: SynthSpec, label: str, labels: list[str], style: list[str]) -> list[str]:
    length = int(rng.integers(spec.min_len, spec.max_len + 1))
    lo, hi = spec.primary_signal_range
    n_signal = min(int(rng.integers(lo, hi + 1)), length - 1)
    tokens = []
    for _ in range(n_signal):
        token_label = label
        if rng.random() < spec.signal_noise:
            token_label = labels[int(rng.integers(0, len(labels)))]
        tokens.append(_pick(rng, _concrete_vocab(token_label, spec.signal_tokens_per_class)))
    tokens.extend(_pick(rng, style) for _ in range(length - n_signal))
    order = rng.permutation(len(tokens))
    return [tokens[i] for i in order]


def _aux_tokens(
    rng,
    spec: SynthSpec,
    label: str,
    related: str,
    primary_style: list[str],
    aux_style: list[str],
) -> list[str]:
    length = int(rng.integers(spec.min_len, spec.max_len + 1))
    lo, hi = spec.aux_signal_range
    n_signal = min(int(rng.integers(lo, hi + 1)), length - 1)
    tokens = []
    size = spec.signal_tokens_per_class
    for _ in range(n_signal):
        if rng.random() < spec.cross_reference:
            tokens.append(_pick(rng, _concrete_vocab(related, size)))
        elif rng.random() < spec.abstract_share:
            tokens.append(_pick(rng, _abstract_vocab(label, size)))
        else:
            tokens.append(_pick(rng, _concrete_vocab(label, size)))
    for _ in range(length - n_signal):
        pool = aux_style if rng.random() < spec.vocab_shift else primary_style
        tokens.append(_pick(rng, pool))
    order = rng.permutation(len(tokens))
    return [tokens[i] for i in order]


def _related_map(labels: list[str], sizes: tuple[int, ...]) -> dict[str, str]:
    """Fixed related-technique citation targets.

    Every class's descriptions cite one of the most common classes (as
    real-world descriptions cite popular techniques), never a rare one,
    deterministically spread over the top quarter by size.
    """
    n_targets = max(2, len(labels) // 4)
    by_size = sorted(range(len(labels)), key=lambda i: (-sizes[i], i))
    targets = [labels[i] for i in by_size[:n_targets]]
    related = {}
    for i, label in enumerate(labels):
        target = targets[i % n_targets]
        if target == label:
            target = targets[(i + 1) % n_targets]
        related[label] = target
    return related


def generate(spec: SynthSpec, seed: int) -> tuple[Dataset, Dataset]:
    """Generate (primary, auxiliary) datasets; texts are globally unique."""
    spec.validate()
    labels = _labels(len(spec.class_sizes))
    primary_style = [f"alpha{i:02d}" for i in range(spec.style_vocab_size)]
    aux_style = [f"beta{i:02d}" for i in range(spec.style_vocab_size)]
    seen_texts: set[str] = set()

    def emit(make_tokens) -> str:
        # regenerate on the (rare) textual collision so preparation-time
        # dedup cannot silently change the histogram
        for _ in range(1000):
            text = " ".join(make_tokens())
            if normalize(text) not in seen_texts:
                seen_texts.add(normalize(text))
                return text
        raise DataFormatError("could not generate a unique sentence; enlarge vocabulary")

    primary: list[Sentence] = []
    serial = 0
    for label, size in zip(labels, spec.class_sizes):
        rng = child_rng(seed, "synth-primary", label)
        for _ in range(size):
            serial += 1
            text = emit(lambda: _primary_tokens(rng, spec, label, labels, primary_style))
            primary.append(Sentence(id=f"p{serial:05d}", text=text, label=label, source=PRIMARY))
    auxiliary: list[Sentence] = []
    related = _related_map(labels, spec.class_sizes)
    serial = 0
    for label in labels:
        rng = child_rng(seed, "synth-aux", label)
        for _ in range(spec.aux_per_class):
            serial += 1
            text = emit(
                lambda: _aux_tokens(rng, spec, label, related[label], primary_style, aux_style)
            )
            auxiliary.append(Sentence(id=f"a{serial:05d}", text=text, label=label, source=AUXILIARY))
    return make_dataset(primary, PRIMARY), make_dataset(auxiliary, AUXILIARY)


def parse_sizes(text: str) -> tuple[int, ...]:
    """Parse a histogram spec like "3x8,6x4,12x2": 8 classes of size 3, etc."""
    sizes: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "x" in chunk:
            size_str, count_str = chunk.split("x", 1)
            size, count = int(size_str), int(count_str)
        else:
            size, count = int(chunk), 1
        if size < 1 or count < 1:
            raise DataFormatError(f"bad histogram chunk {chunk!r}")
        sizes.extend([size] * count)
    if not sizes:
        raise DataFormatError(f"empty histogram spec {text!r}")
    return tuple(sizes)


def write_corpus(spec: SynthSpec, seed: int, out_dir: str | Path) -> dict:
    """Generate and write primary.jsonl / auxiliary.jsonl plus a manifest."""
    from .corpus import write_dataset  # local import keeps module load light

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    primary, auxiliary = generate(spec, seed)
    write_dataset(primary, out_dir / "primary.jsonl")
    write_dataset(auxiliary, out_dir / "auxiliary.jsonl")
    manifest = {
        "seed": seed,
        "spec": asdict(spec),
        "primary_sentences": len(primary),
        "auxiliary_sentences": len(auxiliary),
        "classes": len(primary.labels),
    }
    (out_dir / "synth_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
