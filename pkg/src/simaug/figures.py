"""Matplotlib renderings written by the report command, next to the TSV output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_grid_figure(row_summaries: list[dict], path: str | Path) -> Path:
    """Grouped micro/macro F1 bars per grid row, with seed-std error bars."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [f"({entry['row']}) {entry['label']}" for entry in row_summaries]
    micro = [100.0 * e["summary"]["mean"]["micro_f1"] for e in row_summaries]
    macro = [100.0 * e["summary"]["mean"]["macro_f1"] for e in row_summaries]

    def errs(metric: str) -> list[float]:
        out = []
        for e in row_summaries:
            std = e["summary"]["std"][metric]
            out.append(100.0 * std if std is not None else 0.0)
        return out

    x = np.arange(len(rows))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(rows)), 4.2))
    ax.bar(x - width / 2, micro, width, yerr=errs("micro_f1"), capsize=3, label="micro-F1")
    ax.bar(x + width / 2, macro, width, yerr=errs("macro_f1"), capsize=3, label="macro-F1")
    ax.set_ylabel("F1 (%)")
    ax.set_xticks(x)
    ax.set_xticklabels(rows, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 100)
    ax.legend()
    ax.set_title("Strategy comparison (mean over seeds)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_class_histogram(
    primary_counts: dict[str, int], aux_counts: dict[str, int], path: str | Path
) -> Path:
    """Distribution of class sizes for the primary vs the auxiliary data."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sizes_p = sorted(primary_counts.values())
    sizes_a = sorted(aux_counts.values())
    top = max(sizes_p + sizes_a) if (sizes_p or sizes_a) else 1
    bins = np.arange(1, top + 2)
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.hist(sizes_p, bins=bins, alpha=0.65, label=f"primary ({len(sizes_p)} classes)")
    ax.hist(sizes_a, bins=bins, alpha=0.65, label=f"auxiliary ({len(sizes_a)} classes)")
    ax.set_xlabel("member sentences per class")
    ax.set_ylabel("number of classes")
    ax.set_title("Class size distribution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
