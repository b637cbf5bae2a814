"""Command-line front end: prepare, synth, select, run, grid, report.

Exit codes: 0 on success, 1 for validation errors (bad files, bad
configuration), 2 for runtime or numeric failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import corpus, figures, runner, selector, synth
from .corpus import DataFormatError
from .encoder import EncodingError
from .trainer import TrainingError


def _parse_ratio(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in text.replace(",", ":").split(":") if p]
    if len(parts) != 3:
        raise DataFormatError(f"ratio must have three parts, got {text!r}")
    return parts[0], parts[1], parts[2]


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def _parse_ngram(text: str) -> tuple[int, int]:
    parts = [int(p) for p in text.split("-")]
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) != 2:
        raise DataFormatError(f"ngram range must be like '1-2', got {text!r}")
    return parts[0], parts[1]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="single seed")
    parser.add_argument("--seeds", help="comma-separated seed list")
    parser.add_argument("--jobs", type=int, help="parallel workers for grid cells")


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="prepared data directory")
    parser.add_argument("--k", type=int, help="minority threshold / per-class cap")
    parser.add_argument(
        "--encoder", help="'hashed' (default) or 'file:<embedding file>'"
    )
    parser.add_argument("--encoder-dim", type=int, help="hashed encoder dimension")
    parser.add_argument("--encoder-ngram", help="word n-gram range, e.g. '1-2'")
    parser.add_argument("--architecture", choices=("linear", "mlp1"))
    parser.add_argument("--hidden-dim", type=int)
    parser.add_argument("--epochs-per-stage", type=int)
    parser.add_argument("--batch-size", type=int)
    parser.add_argument("--base-lr", type=float)
    parser.add_argument("--warmup-steps", type=int)
    parser.add_argument("--weight-decay", type=float)
    parser.add_argument("--reset-stage2", action="store_true", default=None)


def _experiment_config(args: argparse.Namespace) -> runner.ExperimentConfig:
    cfg = runner.ExperimentConfig()
    if args.config:
        cfg = runner.load_config_file(args.config, cfg)
    overrides: dict = {}
    mapping = {
        "data": "data_dir",
        "out": "out_dir",
        "k": "k",
        "encoder": "encoder",
        "encoder_dim": "encoder_dim",
        "architecture": "architecture",
        "hidden_dim": "hidden_dim",
        "epochs_per_stage": "epochs_per_stage",
        "batch_size": "batch_size",
        "base_lr": "base_lr",
        "warmup_steps": "warmup_steps",
        "weight_decay": "weight_decay",
        "jobs": "jobs",
        "reset_stage2": "reset_stage2",
    }
    for arg_name, cfg_name in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            overrides[cfg_name] = value
    if getattr(args, "encoder_ngram", None):
        overrides["encoder_ngram"] = _parse_ngram(args.encoder_ngram)
    if getattr(args, "seeds", None):
        overrides["seeds"] = _parse_seeds(args.seeds)
    elif getattr(args, "seed", None) is not None:
        overrides["seeds"] = (args.seed,)
    if getattr(args, "strategy", None):
        overrides["strategy"] = args.strategy
    if getattr(args, "two_stage", None) is not None:
        overrides["two_stage"] = args.two_stage
    cfg = replace(cfg, **overrides)
    if not cfg.data_dir:
        raise DataFormatError("no prepared data directory given (--data)")
    if not cfg.out_dir:
        raise DataFormatError("no output directory given (--out)")
    return cfg


def cmd_prepare(args: argparse.Namespace) -> int:
    out = args.out or "prepared"
    manifest = runner.prepare(
        args.primary,
        args.auxiliary,
        out,
        merge_map=args.merge_map,
        min_count=args.min_count,
        ratio=_parse_ratio(args.ratio),
        seed=args.seed if args.seed is not None else 2,
    )
    print(
        f"prepared {manifest['primary_stages']['filtered']} primary sentences, "
        f"{manifest['classes']} classes "
        f"(splits {manifest['splits']['train']}/{manifest['splits']['dev']}"
        f"/{manifest['splits']['test']}), "
        f"{manifest['auxiliary_stages']['restricted_to_primary_classes']} auxiliary -> {out}"
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec = synth.SynthSpec()
    if args.sizes:
        spec = replace(spec, class_sizes=synth.parse_sizes(args.sizes))
    if args.aux_per_class is not None:
        spec = replace(spec, aux_per_class=args.aux_per_class)
    if args.vocab_shift is not None:
        spec = replace(spec, vocab_shift=args.vocab_shift)
    if args.abstract_share is not None:
        spec = replace(spec, abstract_share=args.abstract_share)
    if args.cross_reference is not None:
        spec = replace(spec, cross_reference=args.cross_reference)
    if args.signal_noise is not None:
        spec = replace(spec, signal_noise=args.signal_noise)
    out = args.out or "synth"
    manifest = synth.write_corpus(spec, args.seed if args.seed is not None else 2, out)
    print(
        f"synthesized {manifest['primary_sentences']} primary / "
        f"{manifest['auxiliary_sentences']} auxiliary sentences over "
        f"{manifest['classes']} classes -> {out}"
    )
    return 0


def cmd_select(args: argparse.Namespace) -> int:
    cfg = _experiment_config(args)
    data = runner.load_prepared(cfg.data_dir)
    enc = runner.build_encoder(cfg, data)
    seed = cfg.seeds[0]
    plan = selector.build_plan(args.strategy, data.train, data.aux, cfg.k, seed, enc)
    out = Path(cfg.out_dir)
    plan_path = out / "plan.jsonl" if not out.suffix else out
    selector.save_plan(plan, plan_path)
    print(f"{plan.strategy}: {len(plan.selected)} selections -> {plan_path}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _experiment_config(args)
    payload = runner.run_experiment(cfg)
    summary = payload["summary"]
    micro = 100.0 * summary["mean"]["micro_f1"]
    macro = 100.0 * summary["mean"]["macro_f1"]
    print(
        f"{cfg.strategy}{' (two-stage)' if cfg.two_stage else ''}: "
        f"micro-F1 {micro:.1f}, macro-F1 {macro:.1f} over seeds {summary['seeds']}"
    )
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    cfg = _experiment_config(args)
    rows = _parse_rows(args.rows)
    grid = runner.run_grid(cfg, rows)
    print((Path(cfg.out_dir) / "grid_table.txt").read_text(encoding="utf-8"))
    print(f"grid outputs written to {cfg.out_dir}")
    return 0


def _parse_rows(text: str | None) -> tuple[str, ...]:
    if not text or text == "main":
        return runner.MAIN_ROWS
    if text == "all":
        return tuple(runner.GRID_ROWS)
    if text == "ablation":
        return runner.ABLATION_ROWS
    return tuple(p.strip() for p in text.split(",") if p.strip())


def cmd_report(args: argparse.Namespace) -> int:
    grid_dir = Path(args.grid)
    out = Path(args.out) if args.out else grid_dir
    grid = runner.collect_grid(grid_dir)
    runner.write_grid_outputs(grid, out)
    figures.save_grid_figure(grid["rows"], out / "figures" / "grid_f1.png")
    made = ["grid_table.txt", "grid_results.tsv", "grid_summary.tsv", "figures/grid_f1.png"]
    if args.data:
        data = runner.load_prepared(args.data)
        figures.save_class_histogram(
            corpus.class_histogram(data.train),
            corpus.class_histogram(data.aux),
            out / "figures" / "class_histogram.png",
        )
        made.append("figures/class_histogram.png")
    print((out / "grid_table.txt").read_text(encoding="utf-8"))
    print(f"report written to {out} ({', '.join(made)})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simaug",
        description=(
            "Similarity-based auxiliary-data augmentation and two-stage training "
            "for low-resource, imbalanced sentence classification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="dedup, merge, filter, and split raw exports")
    p.add_argument("--primary", required=True, help="raw primary dataset file")
    p.add_argument("--auxiliary", required=True, help="raw auxiliary dataset file")
    p.add_argument("--merge-map", help="label merge mapping file (from/to records)")
    p.add_argument("--min-count", type=int, default=3, help="minimum class size kept")
    p.add_argument("--ratio", default="2:1:1", help="train:dev:test ratio")
    _add_common(p)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("synth", help="generate a synthetic primary/auxiliary corpus")
    p.add_argument("--sizes", help="class size histogram, e.g. '1x1,2x1,3x8,12x4'")
    p.add_argument("--aux-per-class", type=int, help="auxiliary sentences per class")
    p.add_argument("--vocab-shift", type=float, help="auxiliary style-vocab shift in [0,1]")
    p.add_argument(
        "--abstract-share", type=float, help="share of auxiliary signal using abstract terms"
    )
    p.add_argument(
        "--cross-reference", type=float, help="probability auxiliary signal cites another class"
    )
    p.add_argument("--signal-noise", type=float, help="probability of off-class signal tokens")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("select", help="build and save an augmentation plan")
    p.add_argument("--strategy", required=True, choices=selector.PLAN_STRATEGIES)
    _add_run_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("run", help="train and evaluate one strategy over seeds")
    p.add_argument("--strategy", choices=runner.RUN_STRATEGIES)
    stage = p.add_mutually_exclusive_group()
    stage.add_argument("--two-stage", dest="two_stage", action="store_true", default=None)
    stage.add_argument("--one-stage", dest="two_stage", action="store_false", default=None)
    _add_run_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("grid", help="run the comparison grid rows over seeds")
    p.add_argument("--rows", help="'main' (default), 'ablation', 'all', or e.g. '1,3,4,6'")
    _add_run_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("report", help="render tables, TSVs, and figures from a grid")
    p.add_argument("--grid", required=True, help="grid output directory")
    p.add_argument("--data", help="prepared data directory for the class histogram figure")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, EncodingError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (TrainingError, runner.TrainingRunFailures, ArithmeticError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
