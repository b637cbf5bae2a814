"""Augmentation strategies: which sentences join the training set, and why.

A strategy produces an AugmentationPlan: the exact, reproducible set of
auxiliary (or oversampled primary) sentence ids per class.  Plans are
serializable; applying a stored plan to the same pools reproduces the
augmented dataset byte for byte.

Minority strategies only touch classes with fewer than k primary
sentences and top them up to k; all-class strategies add up to k per
class everywhere.  Similarity strategies rank candidates by their best
cosine against the class's primary sentences.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import MIXED, DataFormatError, Dataset, Sentence, make_dataset, normalize
from .encoder import Encoder, cosine, encode
from .seeding import child_rng

logger = logging.getLogger(__name__)

PLAN_STRATEGIES = (
    "none",
    "sim_minority",
    "rand_minority",
    "sim_all",
    "rand_all",
    "oversample_same",
    "oversample_swap",
    "all_auxiliary",
)

# Fraction of tokens swapped per oversampled copy (at least one swap).
SWAP_FRACTION = 0.1


@dataclass(frozen=True)
class Selection:
    """One planned addition: a class, a sentence id, and its provenance."""

    label: str
    sid: str
    score: float | None = None
    origin_id: str | None = None


@dataclass(frozen=True)
class AugmentationPlan:
    strategy: str
    k: int
    selected: tuple[Selection, ...]
    seed: int | None = None
    encoder_fingerprint: str | None = None


def similarity_to_class(
    aux: Sentence, primary_class: list[Sentence] | tuple[Sentence, ...], enc: Encoder
) -> float:
    """Best cosine between the auxiliary sentence and any class member."""
    if not primary_class:
        raise DataFormatError("similarity against an empty class set is undefined")
    aux_vec = encode(enc, aux)
    return max(cosine(aux_vec, encode(enc, member)) for member in primary_class)


def _excluded_aux_ids(dp: Dataset, da: Dataset) -> set[str]:
    """Auxiliary sentences that duplicate a primary (normalized text, label) pair.

    A duplicate would score a trivial 1.0 against its own class and add
    nothing, so it never enters the candidate pool.
    """
    primary_keys = {(normalize(s.text), s.label) for s in dp}
    return {s.id for s in da if (normalize(s.text), s.label) in primary_keys}


def _aux_pools(dp: Dataset, da: Dataset) -> dict[str, list[Sentence]]:
    excluded = _excluded_aux_ids(dp, da)
    pools: dict[str, list[Sentence]] = {}
    for s in da:
        if s.id not in excluded:
            pools.setdefault(s.label, []).append(s)
    return pools


def _sim_rank(
    candidates: list[Sentence], class_members: list[Sentence], enc: Encoder
) -> list[tuple[Sentence, float]]:
    """Candidates scored by best cosine, descending; ties by ascending id."""
    member_vecs = [encode(enc, m) for m in class_members]
    scored = []
    for cand in candidates:
        cand_vec = encode(enc, cand)
        score = max(cosine(cand_vec, mv) for mv in member_vecs)
        scored.append((cand, score))
    scored.sort(key=lambda item: (-item[1], item[0].id))
    return scored


def _select_similar(
    dp: Dataset, da: Dataset, k: int, enc: Encoder, minority_only: bool
) -> AugmentationPlan:
    if k < 1:
        raise DataFormatError(f"k must be >= 1, got {k}")
    pools = _aux_pools(dp, da)
    groups = dp.by_label()
    selected: list[Selection] = []
    for label in dp.labels:
        members = groups[label]
        quota = k - len(members) if minority_only else k
        if quota <= 0:
            continue
        pool = pools.get(label)
        if not pool:
            logger.info("class %s has no auxiliary candidates; skipped", label)
            continue
        for cand, score in _sim_rank(pool, members, enc)[:quota]:
            selected.append(Selection(label=label, sid=cand.id, score=score))
    strategy = "sim_minority" if minority_only else "sim_all"
    return AugmentationPlan(
        strategy=strategy,
        k=k,
        selected=tuple(selected),
        encoder_fingerprint=enc.fingerprint(),
    )


def _select_random(
    dp: Dataset, da: Dataset, k: int, seed: int, minority_only: bool
) -> AugmentationPlan:
    if k < 1:
        raise DataFormatError(f"k must be >= 1, got {k}")
    pools = _aux_pools(dp, da)
    groups = dp.by_label()
    selected: list[Selection] = []
    for label in dp.labels:
        quota = k - len(groups[label]) if minority_only else k
        if quota <= 0:
            continue
        pool = pools.get(label)
        if not pool:
            logger.info("class %s has no auxiliary candidates; skipped", label)
            continue
        # one child stream per class: parallel schedules cannot perturb draws
        rng = child_rng(seed, "select", label)
        take = min(quota, len(pool))
        picks = rng.choice(len(pool), size=take, replace=False)
        chosen = sorted(pool[i].id for i in picks)
        selected.extend(Selection(label=label, sid=sid) for sid in chosen)
    strategy = "rand_minority" if minority_only else "rand_all"
    return AugmentationPlan(strategy=strategy, k=k, selected=tuple(selected), seed=seed)


def select_sim_minority(dp: Dataset, da: Dataset, k: int, enc: Encoder) -> AugmentationPlan:
    """Top up each minority class with its most similar auxiliary sentences."""
    return _select_similar(dp, da, k, enc, minority_only=True)


def select_sim_all(dp: Dataset, da: Dataset, k: int, enc: Encoder) -> AugmentationPlan:
    """Add the k most similar auxiliary sentences to every class."""
    return _select_similar(dp, da, k, enc, minority_only=False)


def select_rand_minority(dp: Dataset, da: Dataset, k: int, seed: int) -> AugmentationPlan:
    """Top up each minority class with uniform draws from its auxiliary pool."""
    return _select_random(dp, da, k, seed, minority_only=True)


def select_rand_all(dp: Dataset, da: Dataset, k: int, seed: int) -> AugmentationPlan:
    """Add k uniform auxiliary draws to every class."""
    return _select_random(dp, da, k, seed, minority_only=False)


def _oversample(dp: Dataset, k: int, seed: int, swap: bool) -> AugmentationPlan:
    if k < 1:
        raise DataFormatError(f"k must be >= 1, got {k}")
    groups = dp.by_label()
    selected: list[Selection] = []
    for label in dp.labels:
        members = groups[label]
        need = k - len(members)
        if need <= 0:
            continue
        rng = child_rng(seed, "oversample", label)
        picks = rng.integers(0, len(members), size=need)
        copies_per_origin: dict[str, int] = {}
        for idx in picks:
            origin = members[int(idx)]
            serial = copies_per_origin.get(origin.id, 0) + 1
            copies_per_origin[origin.id] = serial
            selected.append(
                Selection(label=label, sid=f"{origin.id}~dup{serial}", origin_id=origin.id)
            )
    strategy = "oversample_swap" if swap else "oversample_same"
    return AugmentationPlan(strategy=strategy, k=k, selected=tuple(selected), seed=seed)


def oversample_same(dp: Dataset, k: int, seed: int) -> AugmentationPlan:
    """Duplicate uniformly chosen primary sentences until minority classes reach k."""
    return _oversample(dp, k, seed, swap=False)


def oversample_swap(dp: Dataset, k: int, seed: int) -> AugmentationPlan:
    """Like oversample_same, but each copy gets random token-position swaps."""
    return _oversample(dp, k, seed, swap=True)


def select_all_auxiliary(da: Dataset) -> AugmentationPlan:
    """The use-everything baseline: the whole auxiliary pool, uncapped."""
    selected = tuple(Selection(label=s.label, sid=s.id) for s in da)
    return AugmentationPlan(strategy="all_auxiliary", k=0, selected=selected)


def empty_plan() -> AugmentationPlan:
    return AugmentationPlan(strategy="none", k=0, selected=())


def build_plan(
    strategy: str,
    dp: Dataset,
    da: Dataset | None,
    k: int,
    seed: int,
    enc: Encoder | None,
) -> AugmentationPlan:
    """Dispatch to the strategy's selection routine."""
    if strategy == "none":
        return empty_plan()
    if strategy in ("oversample_same", "oversample_swap"):
        return _oversample(dp, k, seed, swap=strategy == "oversample_swap")
    if da is None:
        raise DataFormatError(f"strategy {strategy!r} needs an auxiliary pool")
    if strategy == "all_auxiliary":
        return select_all_auxiliary(da)
    if strategy in ("sim_minority", "sim_all"):
        if enc is None:
            raise DataFormatError(f"strategy {strategy!r} needs an encoder")
        return _select_similar(dp, da, k, enc, minority_only=strategy == "sim_minority")
    if strategy in ("rand_minority", "rand_all"):
        return _select_random(dp, da, k, seed, minority_only=strategy == "rand_minority")
    raise DataFormatError(f"unknown strategy {strategy!r}; expected one of {PLAN_STRATEGIES}")


def _swapped_text(text: str, seed: int, copy_id: str) -> str:
    """Deterministic token-position swaps for one oversampled copy.

    Swap count is max(1, round(SWAP_FRACTION * token count)); single-token
    sentences pass through unchanged.  Derived from (plan seed, copy id)
    so a stored plan alone reproduces the exact text.
    """
    tokens = text.split()
    if len(tokens) < 2:
        return text
    rng = child_rng(seed, "swap", copy_id)
    n_swaps = max(1, round(SWAP_FRACTION * len(tokens)))
    for _ in range(n_swaps):
        i, j = rng.choice(len(tokens), size=2, replace=False)
        tokens[i], tokens[j] = tokens[j], tokens[i]
    return " ".join(tokens)


def apply_plan(dp_train: Dataset, pool: Dataset | None, plan: AugmentationPlan) -> Dataset:
    """Materialize a plan: primary sentences first, then per-class additions.

    Additions are grouped by class (primary catalog order, then any new
    classes) and sorted by ascending id inside each group; the trainer
    reshuffles every epoch, so this order only serves reproducibility.
    """
    if plan.strategy == "none":
        return dp_train
    oversampling = plan.strategy in ("oversample_same", "oversample_swap")
    lookup = dp_train.by_id() if oversampling else (pool.by_id() if pool is not None else {})
    label_order = {label: i for i, label in enumerate(dp_train.labels)}
    next_order = len(label_order)
    for sel in plan.selected:
        if sel.label not in label_order:
            label_order[sel.label] = next_order
            next_order += 1
    ordered = sorted(plan.selected, key=lambda sel: (label_order[sel.label], sel.sid))
    additions: list[Sentence] = []
    for sel in ordered:
        if sel.origin_id is not None:
            origin = lookup.get(sel.origin_id)
            if origin is None:
                raise DataFormatError(f"plan copy origin id {sel.origin_id!r} not found in primary data")
            text = origin.text
            if plan.strategy == "oversample_swap":
                if plan.seed is None:
                    raise DataFormatError("oversample_swap plan is missing its seed")
                text = _swapped_text(text, plan.seed, sel.sid)
            additions.append(Sentence(id=sel.sid, text=text, label=sel.label, source=origin.source))
        else:
            source_sentence = lookup.get(sel.sid)
            if source_sentence is None:
                raise DataFormatError(f"plan id {sel.sid!r} not found in the auxiliary pool")
            if source_sentence.label != sel.label:
                raise DataFormatError(
                    f"plan id {sel.sid!r} is labeled {source_sentence.label!r} in the pool, "
                    f"not {sel.label!r}"
                )
            additions.append(source_sentence)
    return make_dataset(tuple(dp_train) + tuple(additions), MIXED)


def save_plan(plan: AugmentationPlan, path: str | Path) -> None:
    """Write a plan file: a header record then one record per selection."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        header = {
            "strategy": plan.strategy,
            "k": plan.k,
            "seed": plan.seed,
            "encoder_fingerprint": plan.encoder_fingerprint,
        }
        handle.write(json.dumps(header, sort_keys=True) + "\n")
        for sel in plan.selected:
            record = {
                "class": sel.label,
                "id": sel.sid,
                "score": sel.score,
                "origin_id": sel.origin_id,
            }
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def load_plan(path: str | Path) -> AugmentationPlan:
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        lines = [line for line in handle if line.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty plan file")
    header = json.loads(lines[0])
    strategy = header.get("strategy")
    if strategy not in PLAN_STRATEGIES:
        raise DataFormatError(f"{path}: unknown plan strategy {strategy!r}")
    selected = []
    for lineno, line in enumerate(lines[1:], start=2):
        record = json.loads(line)
        try:
            selected.append(
                Selection(
                    label=record["class"],
                    sid=record["id"],
                    score=record.get("score"),
                    origin_id=record.get("origin_id"),
                )
            )
        except KeyError as exc:
            raise DataFormatError(f"{path}:{lineno}: selection record missing {exc}") from exc
    return AugmentationPlan(
        strategy=strategy,
        k=int(header.get("k", 0)),
        selected=tuple(selected),
        seed=header.get("seed"),
        encoder_fingerprint=header.get("encoder_fingerprint"),
    )
