"""Experiment orchestration: data preparation, single runs, and the result grid.

A prepared data directory holds ``primary.train/.dev/.test`` plus
``auxiliary.jsonl``.  A run trains one strategy with one seed and writes
a plan (when there is one), a model file, a machine-readable report and a
manifest into its own keyed directory, so runs can execute in parallel
and a failed run never corrupts a finished one.  Reports and model files
contain no timestamps: repeating a run with the same config reproduces
them byte for byte.
"""
from __future__ import annotations

import hashlib
import json
import logging
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from . import corpus, selector
from .corpus import AUXILIARY, PRIMARY, DataFormatError, Dataset
from .encoder import Encoder, fit_hashed_encoder, load_embedding_file
from .evaluator import EvalReport, evaluate, summarize_seeds
from .trainer import (
    TrainConfig,
    init_model,
    predict_dataset,
    save_model,
    train_stage,
    two_stage_train,
)

logger = logging.getLogger(__name__)

RUN_STRATEGIES = selector.PLAN_STRATEGIES + ("primary_only",)

# Published seeds for multi-seed reporting: the first five primes.
DEFAULT_SEEDS = (2, 3, 5, 7, 11)

# Default peak learning rates per encoder kind: hashed-feature linear
# models need much larger steps than transformer-feature heads.
DEFAULT_LR_HASHED = 2e-3
DEFAULT_LR_FILE = 2e-5


@dataclass(frozen=True)
class GridRow:
    row_id: str
    strategy: str
    two_stage: bool
    label: str


# The comparison grid: six main rows, four minority-ablation rows, two
# all-class-ablation rows.  "->" marks two-stage training.
GRID_ROWS: dict[str, GridRow] = {
    row.row_id: row
    for row in (
        GridRow("1", "primary_only", False, "primary"),
        GridRow("2", "primary_only", True, "primary->primary"),
        GridRow("3", "all_auxiliary", False, "primary+aux"),
        GridRow("4", "all_auxiliary", True, "primary+aux->primary"),
        GridRow("5", "sim_minority", False, "primary+sim_minority"),
        GridRow("6", "sim_minority", True, "primary+sim_minority->primary"),
        GridRow("a", "oversample_same", True, "primary+oversample_same->primary"),
        GridRow("b", "oversample_swap", True, "primary+oversample_swap->primary"),
        GridRow("c", "rand_minority", True, "primary+rand_minority->primary"),
        GridRow("d", "sim_minority", True, "primary+sim_minority->primary"),
        GridRow("e", "rand_all", True, "primary+rand_all->primary"),
        GridRow("f", "sim_all", True, "primary+sim_all->primary"),
    )
}

MAIN_ROWS = ("1", "2", "3", "4", "5", "6")
ABLATION_ROWS = ("a", "b", "c", "d", "e", "f")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; defaults mirror the standard training recipe."""

    data_dir: str = ""
    out_dir: str = ""
    strategy: str = "sim_minority"
    two_stage: bool = True
    k: int = 10
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    jobs: int = 1
    architecture: str = "linear"
    hidden_dim: int = 256
    encoder: str = "hashed"  # "hashed" or "file:<path>"
    encoder_dim: int = 512
    encoder_ngram: tuple[int, int] = (1, 2)
    epochs_per_stage: int = 50
    batch_size: int = 16
    base_lr: float | None = None  # resolved per encoder kind when unset
    warmup_steps: int = 1000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.01
    shuffle: bool = True
    reset_stage2: bool = False

    def validate(self) -> None:
        if self.strategy not in RUN_STRATEGIES:
            raise DataFormatError(
                f"unknown strategy {self.strategy!r}; expected one of {RUN_STRATEGIES}"
            )
        if self.k < 1:
            raise DataFormatError(f"k must be >= 1, got {self.k}")
        if not self.seeds:
            raise DataFormatError("need at least one seed")
        if self.jobs < 1:
            raise DataFormatError("jobs must be >= 1")

    def resolved_base_lr(self) -> float:
        if self.base_lr is not None:
            return self.base_lr
        return DEFAULT_LR_FILE if self.encoder.startswith("file:") else DEFAULT_LR_HASHED

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            epochs_per_stage=self.epochs_per_stage,
            batch_size=self.batch_size,
            base_lr=self.resolved_base_lr(),
            warmup_steps=self.warmup_steps,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            weight_decay=self.weight_decay,
            seed=seed,
            shuffle=self.shuffle,
            reset_stage2=self.reset_stage2,
        )

    def to_dict(self) -> dict:
        data = asdict(self)
        data["seeds"] = list(self.seeds)
        data["encoder_ngram"] = list(self.encoder_ngram)
        return data


_CONFIG_LIST_KEYS = {"seeds": tuple, "encoder_ngram": tuple}


def config_from_dict(raw: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from a JSON-style dict; unknown keys are rejected."""
    cfg = base or ExperimentConfig()
    known = set(cfg.__dataclass_fields__)
    updates = {}
    for key, value in raw.items():
        if key not in known:
            raise DataFormatError(f"unknown config key {key!r}")
        if key in _CONFIG_LIST_KEYS and value is not None:
            value = _CONFIG_LIST_KEYS[key](value)
        updates[key] = value
    return replace(cfg, **updates)


def load_config_file(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise DataFormatError(f"{path}: config must be a JSON object")
    return config_from_dict(raw, base)


@dataclass(frozen=True)
class PreparedData:
    train: Dataset
    dev: Dataset
    test: Dataset
    aux: Dataset


def prepare(
    raw_primary: str | Path,
    raw_auxiliary: str | Path,
    out_dir: str | Path,
    merge_map: str | Path | None = None,
    min_count: int = 3,
    ratio: tuple[int, int, int] = (2, 1, 1),
    seed: int = 2,
) -> dict:
    """Deduplicate, relabel, filter and split the raw exports.

    The auxiliary pool goes through the same dedup/merge steps and is then
    restricted to the classes that survive the primary min-count filter.
    Returns (and writes) a manifest with the per-stage counts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mapping = corpus.load_merge_map(merge_map) if merge_map else {}

    primary = corpus.load_dataset(raw_primary, PRIMARY)
    stages = {"raw": len(primary)}
    primary = corpus.deduplicate(primary)
    stages["deduplicated"] = len(primary)
    # merging can itself create (text, label) duplicates; collapse them too
    primary = corpus.deduplicate(corpus.merge_labels(primary, mapping))
    stages["merged"] = len(primary)
    primary = corpus.filter_min_class_size(primary, min_count)
    stages["filtered"] = len(primary)

    bundle = corpus.stratified_split(primary, ratio=ratio, seed=seed)
    corpus.write_split_bundle(bundle, out_dir / "primary", seed=seed, ratio=ratio)

    aux = corpus.load_dataset(raw_auxiliary, AUXILIARY)
    aux_stages = {"raw": len(aux)}
    aux = corpus.deduplicate(corpus.merge_labels(corpus.deduplicate(aux), mapping))
    aux_stages["deduplicated_merged"] = len(aux)
    keep = set(primary.labels)
    aux = corpus.make_dataset([s for s in aux if s.label in keep], AUXILIARY)
    aux_stages["restricted_to_primary_classes"] = len(aux)
    corpus.write_dataset(aux, out_dir / "auxiliary.jsonl")

    manifest = {
        "seed": seed,
        "ratio": list(ratio),
        "min_count": min_count,
        "merge_map_entries": len(mapping),
        "primary_stages": stages,
        "auxiliary_stages": aux_stages,
        "classes": len(primary.labels),
        "splits": {
            "train": len(bundle.train),
            "dev": len(bundle.dev),
            "test": len(bundle.test),
        },
        "class_histogram": corpus.class_histogram(primary),
        "auxiliary_class_histogram": corpus.class_histogram(aux),
        "fingerprints": {
            "train": corpus.dataset_fingerprint(bundle.train),
            "dev": corpus.dataset_fingerprint(bundle.dev),
            "test": corpus.dataset_fingerprint(bundle.test),
            "auxiliary": corpus.dataset_fingerprint(aux),
        },
    }
    (out_dir / "prepare_manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest


def load_prepared(data_dir: str | Path) -> PreparedData:
    data_dir = Path(data_dir)
    bundle = corpus.load_split_bundle(data_dir / "primary", PRIMARY)
    aux = corpus.load_dataset(data_dir / "auxiliary.jsonl", AUXILIARY)
    return PreparedData(train=bundle.train, dev=bundle.dev, test=bundle.test, aux=aux)


def build_encoder(cfg: ExperimentConfig, data: PreparedData) -> Encoder:
    """The run's encoder: hashed TF-IDF fitted on train + auxiliary text
    (one shared feature space for both styles), or a user embedding file."""
    if cfg.encoder.startswith("file:"):
        return load_embedding_file(cfg.encoder[len("file:") :])
    if cfg.encoder != "hashed":
        raise DataFormatError(f"unknown encoder spec {cfg.encoder!r}")
    fit_corpus = corpus.make_dataset(tuple(data.train) + tuple(data.aux), corpus.MIXED)
    return fit_hashed_encoder(fit_corpus, dimension=cfg.encoder_dim, ngram_range=cfg.encoder_ngram)


def _file_fingerprint(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_one(
    cfg: ExperimentConfig,
    data: PreparedData,
    strategy: str,
    two_stage: bool,
    seed: int,
    run_dir: str | Path,
    row_id: str | None = None,
) -> dict:
    """Execute one (strategy, seed) run and write its artifacts.

    On any failure the partially written run directory is removed before
    the error propagates.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        enc = build_encoder(cfg, data)
        train_cfg = cfg.train_config(seed)
        plan_fingerprint = None
        if strategy == "primary_only":
            stage1 = data.train
        else:
            plan = selector.build_plan(strategy, data.train, data.aux, cfg.k, seed, enc)
            selector.save_plan(plan, run_dir / "plan.jsonl")
            plan_fingerprint = _file_fingerprint(run_dir / "plan.jsonl")
            stage1 = selector.apply_plan(data.train, data.aux, plan)
        stage_fingerprints = [corpus.dataset_fingerprint(stage1)]
        if two_stage:
            model = two_stage_train(
                cfg.architecture, stage1, data.train, enc, train_cfg, hidden_dim=cfg.hidden_dim
            )
            stage_fingerprints.append(corpus.dataset_fingerprint(data.train))
        else:
            model = init_model(
                cfg.architecture,
                input_dim=enc.dimension,
                num_classes=len(stage1.labels),
                seed=seed,
                hidden_dim=cfg.hidden_dim,
                labels=stage1.labels,
            )
            train_stage(model, stage1, enc, train_cfg)
        catalog = data.test.labels
        dev_report = evaluate(
            [s.label for s in data.dev], predict_dataset(model, enc, data.dev), catalog, seed
        )
        test_report = evaluate(
            [s.label for s in data.test], predict_dataset(model, enc, data.test), catalog, seed
        )
        save_model(model, run_dir / "model.bin", enc.fingerprint(), train_cfg)
        report = {
            "row": row_id,
            "strategy": strategy,
            "two_stage": two_stage,
            "seed": seed,
            "k": cfg.k,
            "architecture": cfg.architecture,
            "encoder_fingerprint": enc.fingerprint(),
            "plan_fingerprint": plan_fingerprint,
            "stage_dataset_fingerprints": stage_fingerprints,
            "stage_sizes": [len(stage1)] + ([len(data.train)] if two_stage else []),
            "steps": model.step_counter,
            "epochs_per_stage": cfg.epochs_per_stage,
            "test": test_report.to_dict(),
            "dev": dev_report.to_dict(),
        }
        (run_dir / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        manifest = {
            "strategy": strategy,
            "two_stage": two_stage,
            "seed": seed,
            "plan_fingerprint": plan_fingerprint,
            "stage_dataset_fingerprints": stage_fingerprints,
            "epochs_per_stage": cfg.epochs_per_stage,
            "steps": model.step_counter,
            "test_evaluations": 1,
            "model_selection_split": "dev",
            "wall_clock_seconds": time.time() - started,
        }
        (run_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return report
    except Exception:
        shutil.rmtree(run_dir, ignore_errors=True)
        raise


def _report_to_eval(report: dict, split: str = "test") -> EvalReport:
    section = report[split]
    per_class = {
        label: (v["precision"], v["recall"], v["f1"]) for label, v in section["per_class"].items()
    }
    return EvalReport(
        per_class=per_class,
        micro_f1=section["micro_f1"],
        macro_f1=section["macro_f1"],
        n_examples=section["n_examples"],
        n_classes=section["n_classes"],
        seed=report["seed"],
    )


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run one strategy across all configured seeds; write a seed summary."""
    cfg.validate()
    data = load_prepared(cfg.data_dir)
    out_dir = Path(cfg.out_dir)
    reports = []
    for seed in cfg.seeds:
        reports.append(
            run_one(cfg, data, cfg.strategy, cfg.two_stage, seed, out_dir / f"seed{seed}")
        )
    summary = summarize_seeds([_report_to_eval(r) for r in reports])
    payload = {
        "strategy": cfg.strategy,
        "two_stage": cfg.two_stage,
        "k": cfg.k,
        "summary": summary.to_dict(),
        "per_seed": {
            str(r["seed"]): {"micro_f1": r["test"]["micro_f1"], "macro_f1": r["test"]["macro_f1"]}
            for r in reports
        },
    }
    (out_dir / "summary.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return payload


class TrainingRunFailures(RuntimeError):
    """One or more grid cells failed; completed cells were preserved."""

    def __init__(self, failures: dict[str, str]):
        super().__init__(f"{len(failures)} grid run(s) failed: {sorted(failures)}")
        self.failures = failures


def _grid_task(args: tuple) -> dict:
    """Worker for one (row, seed) grid cell; used by the process pool."""
    cfg_dict, data_dir, row_id, seed, run_dir = args
    cfg = config_from_dict(cfg_dict)
    data = load_prepared(data_dir)
    row = GRID_ROWS[row_id]
    return run_one(cfg, data, row.strategy, row.two_stage, seed, run_dir, row_id=row_id)


def run_grid(cfg: ExperimentConfig, rows: tuple[str, ...] = MAIN_ROWS) -> dict:
    """Run the requested grid rows over all seeds and summarize per row.

    Cells fail independently: a failure is recorded and the remaining
    cells still run; completed outputs are preserved.  Cell results do not
    depend on the jobs setting because every random stream is derived from
    the cell's own (seed, namespace) material.
    """
    cfg.validate()
    for row_id in rows:
        if row_id not in GRID_ROWS:
            raise DataFormatError(f"unknown grid row {row_id!r}; known rows: {sorted(GRID_ROWS)}")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [
        (cfg.to_dict(), cfg.data_dir, row_id, seed, str(out_dir / "runs" / f"row{row_id}" / f"seed{seed}"))
        for row_id in rows
        for seed in cfg.seeds
    ]
    results: dict[tuple[str, int], dict] = {}
    failures: dict[str, str] = {}
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = {pool.submit(_grid_task, task): task for task in tasks}
            for future, task in futures.items():
                _, _, row_id, seed, _ = task
                try:
                    results[(row_id, seed)] = future.result()
                except Exception as exc:
                    logger.error("grid row %s seed %s failed: %s", row_id, seed, exc)
                    failures[f"row{row_id}/seed{seed}"] = str(exc)
    else:
        data = load_prepared(cfg.data_dir)
        for task in tasks:
            _, _, row_id, seed, run_dir = task
            row = GRID_ROWS[row_id]
            try:
                results[(row_id, seed)] = run_one(
                    cfg, data, row.strategy, row.two_stage, seed, run_dir, row_id=row_id
                )
            except Exception as exc:  # keep completed cells; report at the end
                logger.error("grid row %s seed %s failed: %s", row_id, seed, exc)
                failures[f"row{row_id}/seed{seed}"] = str(exc)
    row_summaries = []
    for row_id in rows:
        row_reports = [results[(row_id, s)] for s in cfg.seeds if (row_id, s) in results]
        if not row_reports:
            continue
        summary = summarize_seeds([_report_to_eval(r) for r in row_reports])
        row = GRID_ROWS[row_id]
        row_summaries.append(
            {
                "row": row_id,
                "label": row.label,
                "strategy": row.strategy,
                "two_stage": row.two_stage,
                "summary": summary.to_dict(),
            }
        )
    grid = {
        "rows": row_summaries,
        "seeds": list(cfg.seeds),
        "k": cfg.k,
        "failures": failures,
        "results": {f"row{row_id}/seed{seed}": r for (row_id, seed), r in results.items()},
    }
    write_grid_outputs(grid, out_dir)
    if failures:
        raise TrainingRunFailures(failures)
    return grid


def render_grid_table(row_summaries: list[dict]) -> str:
    """Fixed-width comparison table, percentages to one decimal, mean +/- std."""
    header = f"{'row':<5} {'model':<38} {'micro-f1':>16} {'macro-f1':>16}"
    lines = [header, "-" * len(header)]
    for entry in row_summaries:
        summary = entry["summary"]
        cells = []
        for metric in ("micro_f1", "macro_f1"):
            mean = 100.0 * summary["mean"][metric]
            std = summary["std"][metric]
            cells.append(
                f"{mean:5.1f} +/- {100.0 * std:4.1f}" if std is not None else f"{mean:5.1f}        "
            )
        tag = f"({entry['row']})"
        lines.append(f"{tag:<5} {entry['label']:<38} {cells[0]:>16} {cells[1]:>16}")
    return "\n".join(lines) + "\n"


def write_grid_outputs(grid: dict, out_dir: str | Path) -> None:
    """Write the rendered table plus delimited per-run and per-row records."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "grid_table.txt").write_text(render_grid_table(grid["rows"]), encoding="utf-8")
    lines = ["row\tstrategy\ttwo_stage\tseed\tmicro_f1\tmacro_f1"]
    for key in sorted(grid["results"]):
        r = grid["results"][key]
        lines.append(
            "\t".join(
                [
                    str(r["row"]),
                    r["strategy"],
                    str(r["two_stage"]).lower(),
                    str(r["seed"]),
                    repr(r["test"]["micro_f1"]),
                    repr(r["test"]["macro_f1"]),
                ]
            )
        )
    (out_dir / "grid_results.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    lines = [
        "row\tlabel\tstrategy\ttwo_stage\tn_seeds\tmicro_f1_mean\tmicro_f1_std\tmacro_f1_mean\tmacro_f1_std"
    ]
    for entry in grid["rows"]:
        s = entry["summary"]
        lines.append(
            "\t".join(
                [
                    entry["row"],
                    entry["label"],
                    entry["strategy"],
                    str(entry["two_stage"]).lower(),
                    str(len(s["seeds"])),
                    repr(s["mean"]["micro_f1"]),
                    repr(s["std"]["micro_f1"]) if s["std"]["micro_f1"] is not None else "",
                    repr(s["mean"]["macro_f1"]),
                    repr(s["std"]["macro_f1"]) if s["std"]["macro_f1"] is not None else "",
                ]
            )
        )
    (out_dir / "grid_summary.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out_dir / "grid.json").write_text(
        json.dumps(grid, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def collect_grid(grid_dir: str | Path) -> dict:
    """Rebuild the grid structure from per-run report files on disk."""
    grid_dir = Path(grid_dir)
    runs_dir = grid_dir / "runs"
    if not runs_dir.is_dir():
        raise DataFormatError(f"{runs_dir}: no runs directory found")
    results: dict[str, dict] = {}
    per_row: dict[str, list[dict]] = {}
    for report_path in sorted(runs_dir.glob("row*/seed*/report.json")):
        report = json.loads(report_path.read_text(encoding="utf-8"))
        row_id = report["row"]
        results[f"row{row_id}/seed{report['seed']}"] = report
        per_row.setdefault(row_id, []).append(report)
    if not results:
        raise DataFormatError(f"{runs_dir}: no run reports found")
    row_summaries = []
    for row_id in sorted(per_row, key=lambda r: (len(r), r)):
        reports = sorted(per_row[row_id], key=lambda r: r["seed"])
        summary = summarize_seeds([_report_to_eval(r) for r in reports])
        row = GRID_ROWS.get(row_id)
        row_summaries.append(
            {
                "row": row_id,
                "label": row.label if row else reports[0]["strategy"],
                "strategy": reports[0]["strategy"],
                "two_stage": reports[0]["two_stage"],
                "summary": summary.to_dict(),
            }
        )
    seeds = sorted({r["seed"] for r in results.values()})
    return {"rows": row_summaries, "seeds": seeds, "failures": {}, "results": results}
