"""Independent oracle implementations used to cross-check the library.

Nothing here shares code with the package: metrics are counted with
plain loops, selection is a full pairwise scan over an explicit
similarity matrix, and gradients come from central finite differences.
"""
from __future__ import annotations

import numpy as np


def naive_metrics(golds, preds, catalog):
    """Per-class P/R/F1 plus micro/macro, counted definitionally.

    Each class is scored by scanning the full (gold, pred) sequence for
    that class alone (vectorized elementwise comparisons; no confusion
    matrix is built and no code is shared with the package).
    """
    golds = np.asarray(golds)
    preds = np.asarray(preds)
    per_class = {}
    for label in catalog:
        is_gold = golds == label
        is_pred = preds == label
        tp = int(np.sum(is_gold & is_pred))
        fp = int(np.sum(~is_gold & is_pred))
        fn = int(np.sum(is_gold & ~is_pred))
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[label] = (precision, recall, f1, tp, fp, fn)
    total_tp = sum(v[3] for v in per_class.values())
    total_fp = sum(v[4] for v in per_class.values())
    total_fn = sum(v[5] for v in per_class.values())
    micro_p = total_tp / (total_tp + total_fp) if total_tp + total_fp > 0 else 0.0
    micro_r = total_tp / (total_tp + total_fn) if total_tp + total_fn > 0 else 0.0
    micro = 2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r > 0 else 0.0
    macro = sum(v[2] for v in per_class.values()) / len(catalog) if catalog else 0.0
    return {
        "per_class": {label: v[:3] for label, v in per_class.items()},
        "micro_f1": micro,
        "macro_f1": macro,
    }


def exhaustive_sim_selection(primary, auxiliary, vectors, k, minority_only):
    """Full pairwise-cosine scan: the selection oracle.

    ``primary`` and ``auxiliary`` are (id, label) lists, ``vectors`` maps
    id -> raw vector.  Builds the complete similarity matrix per class,
    ranks by (-score, id), and cuts at the quota.  Returns
    label -> list of chosen auxiliary ids.
    """
    prim_groups: dict[str, list[str]] = {}
    for sid, label in primary:
        prim_groups.setdefault(label, []).append(sid)
    aux_groups: dict[str, list[str]] = {}
    for sid, label in auxiliary:
        aux_groups.setdefault(label, []).append(sid)
    chosen: dict[str, list[str]] = {}
    for label, members in prim_groups.items():
        quota = k - len(members) if minority_only else k
        if quota <= 0:
            continue
        candidates = aux_groups.get(label, [])
        if not candidates:
            continue
        member_matrix = np.stack([vectors[m] / np.linalg.norm(vectors[m]) for m in members])
        scored = []
        for cid in candidates:
            unit = vectors[cid] / np.linalg.norm(vectors[cid])
            scored.append((cid, float(np.max(member_matrix @ unit))))
        scored.sort(key=lambda item: (-item[1], item[0]))
        chosen[label] = [cid for cid, _ in scored[:quota]]
    return chosen


def finite_diff_grads(loss_fn, params, h=1e-6):
    """Central finite differences of loss_fn with respect to every entry.

    ``loss_fn`` must read the (mutated in place) arrays in ``params``.
    """
    grads = {}
    for name, arr in params.items():
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            loss_plus = loss_fn()
            flat[i] = original - h
            loss_minus = loss_fn()
            flat[i] = original
            flat_grad[i] = (loss_plus - loss_minus) / (2.0 * h)
        grads[name] = grad
    return grads


def random_labeled_pool(rng, n_classes, n_primary, n_auxiliary, dim):
    """A random (primary, auxiliary, vectors) triple for selection tests.

    Texts are unique by construction so no dedup-exclusion applies.
    """
    labels = [f"C{i:02d}" for i in range(n_classes)]
    primary = []
    for i in range(n_primary):
        primary.append((f"p{i:04d}", labels[int(rng.integers(0, n_classes))]))
    auxiliary = []
    for i in range(n_auxiliary):
        auxiliary.append((f"a{i:04d}", labels[int(rng.integers(0, n_classes))]))
    vectors = {}
    for sid, _ in primary + auxiliary:
        vectors[sid] = rng.normal(size=dim)
    return primary, auxiliary, vectors
