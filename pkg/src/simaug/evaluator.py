"""Per-class and aggregate F1 metrics plus multi-seed summaries.

Micro-F1 comes from globally summed confusion counts and, for
single-label prediction, equals accuracy exactly.  Macro-F1 averages
per-class F1 over the *gold label catalog*: a class the model never
predicts and never sees contributes 0, so the metric stays sensitive to
minority-class failures.  That convention is declared in every report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

MACRO_CONVENTION = "macro-F1 averages per-class F1 over the gold catalog; empty classes count as 0"


@dataclass(frozen=True)
class ClassCount:
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class ConfusionCounts:
    per_class: dict[str, ClassCount]  # insertion order = catalog order
    n_examples: int


@dataclass(frozen=True)
class EvalReport:
    per_class: dict[str, tuple[float, float, float]]  # label -> (precision, recall, f1)
    micro_f1: float
    macro_f1: float
    n_examples: int
    n_classes: int
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "per_class": {
                label: {"precision": p, "recall": r, "f1": f}
                for label, (p, r, f) in self.per_class.items()
            },
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "n_examples": self.n_examples,
            "n_classes": self.n_classes,
            "seed": self.seed,
            "macro_convention": MACRO_CONVENTION,
        }


@dataclass(frozen=True)
class SeedSummary:
    seeds: tuple[int, ...]
    mean: dict[str, float]
    std: dict[str, float | None]  # sample (n-1) std; None below two seeds

    def to_dict(self) -> dict:
        return {"seeds": list(self.seeds), "mean": dict(self.mean), "std": dict(self.std)}


def confusion(
    golds: Sequence[str], preds: Sequence[str], catalog: Sequence[str]
) -> ConfusionCounts:
    """Single-label confusion counts per catalog class."""
    if len(golds) != len(preds):
        raise ValueError(f"{len(golds)} golds vs {len(preds)} predictions")
    known = set(catalog)
    tp = {label: 0 for label in catalog}
    fp = {label: 0 for label in catalog}
    fn = {label: 0 for label in catalog}
    for gold, pred in zip(golds, preds):
        if gold not in known:
            raise ValueError(f"gold label {gold!r} not in catalog")
        if pred not in known:
            raise ValueError(f"predicted label {pred!r} not in catalog")
        if gold == pred:
            tp[gold] += 1
        else:
            fn[gold] += 1
            fp[pred] += 1
    per_class = {label: ClassCount(tp[label], fp[label], fn[label]) for label in catalog}
    return ConfusionCounts(per_class=per_class, n_examples=len(golds))


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def micro_f1(counts: ConfusionCounts) -> float:
    """F1 of the summed counts; equals accuracy for single-label prediction."""
    tp = sum(c.tp for c in counts.per_class.values())
    fp = sum(c.fp for c in counts.per_class.values())
    fn = sum(c.fn for c in counts.per_class.values())
    return _prf(tp, fp, fn)[2]


def macro_f1(counts: ConfusionCounts) -> float:
    """Unweighted mean of per-class F1 over the catalog."""
    if not counts.per_class:
        return 0.0
    return sum(_prf(c.tp, c.fp, c.fn)[2] for c in counts.per_class.values()) / len(
        counts.per_class
    )


def evaluate(
    golds: Sequence[str],
    preds: Sequence[str],
    catalog: Sequence[str],
    seed: int | None = None,
) -> EvalReport:
    """Full report: per-class precision/recall/F1 and both aggregates."""
    counts = confusion(golds, preds, catalog)
    per_class = {
        label: _prf(c.tp, c.fp, c.fn) for label, c in counts.per_class.items()
    }
    return EvalReport(
        per_class=per_class,
        micro_f1=micro_f1(counts),
        macro_f1=macro_f1(counts),
        n_examples=counts.n_examples,
        n_classes=len(catalog),
        seed=seed,
    )


def summarize_seeds(reports: Sequence[EvalReport]) -> SeedSummary:
    """Mean and sample standard deviation of micro/macro F1 across seeds."""
    if not reports:
        raise ValueError("need at least one report to summarize")
    catalogs = {tuple(sorted(r.per_class)) for r in reports}
    if len(catalogs) != 1:
        raise ValueError("reports have mismatched class catalogs")
    seeds = tuple(r.seed if r.seed is not None else -1 for r in reports)
    values = {
        "micro_f1": [r.micro_f1 for r in reports],
        "macro_f1": [r.macro_f1 for r in reports],
    }
    mean = {name: sum(v) / len(v) for name, v in values.items()}
    std: dict[str, float | None] = {}
    for name, v in values.items():
        if len(v) < 2:
            std[name] = None
        else:
            mu = mean[name]
            std[name] = math.sqrt(sum((x - mu) ** 2 for x in v) / (len(v) - 1))
    return SeedSummary(seeds=seeds, mean=mean, std=std)
