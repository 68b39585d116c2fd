"""Command-line entry point: ``graphsim <subcommand> [options] [--key=value ...]``.

Any argument of the form ``--key=value`` that is not a named option of the
subcommand overrides the corresponding config field (``--node_state_dim=16``,
``--loss.family=hamming``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import plotting
from .autodiff import CheckpointError
from .config import TrainConfig, default_output_dir, load_config
from .ged import build_eval_sets, write_eval_sets
from .graph import GraphFormatError, graph_from_obj
from .metrics import write_score_csv
from .training import (CHECKPOINT_NAME, CONFIG_NAME, METRICS_NAME, evaluate, load_eval_sets,
                       load_model, load_run_config, read_metrics, score_pairs, train_loop)

log = logging.getLogger("graphsim")


class UsageError(Exception):
    pass


def _write_json(path: str, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _config(args, overrides: list[str]) -> TrainConfig:
    return load_config(args.config, overrides)


def _eval_sets(args, cfg: TrainConfig):
    if args.eval_data:
        return load_eval_sets(args.eval_data)
    return build_eval_sets(cfg.data, cfg.eval_size)


def _model_from_args(args, overrides: list[str]):
    """Resolve ``--run`` or ``--checkpoint`` (+ ``--config``) into ``(cfg, model)``."""
    if args.run:
        cfg = load_config(os.path.join(args.run, CONFIG_NAME), overrides)
        ckpt = args.checkpoint or os.path.join(args.run, CHECKPOINT_NAME)
    elif args.checkpoint:
        cfg = _config(args, overrides)
        ckpt = args.checkpoint
    else:
        raise UsageError("give --run DIR or --checkpoint FILE (with --config)")
    return cfg, load_model(ckpt, cfg)


# --- subcommands ------------------------------------------------------------------

def cmd_gen_data(args, overrides) -> int:
    cfg = _config(args, overrides)
    out = args.out or default_output_dir("data")
    manifest = write_eval_sets(cfg.data, out, args.size or cfg.eval_size)
    print(f"wrote {manifest['size']} pairs and {manifest['size']} triplets to {out}")
    return 0


def cmd_train(args, overrides) -> int:
    cfg = _config(args, overrides)
    out = args.out or default_output_dir(f"{cfg.model_kind}-T{cfg.model.num_propagation_steps}"
                                         f"-seed{cfg.seed}")
    eval_sets = load_eval_sets(args.eval_data) if args.eval_data else None
    reports = train_loop(cfg, out, eval_sets)
    if not args.no_plots:
        plotting.plot_training_curves(read_metrics(os.path.join(out, METRICS_NAME)),
                                      os.path.join(out, "training_curves.png"),
                                      title=f"{cfg.model_kind}, T={cfg.model.num_propagation_steps}")
    last = reports[-1]
    print(f"step {last.step} loss {last.loss:.6f} pair_auc {last.pair_auc:.4f} "
          f"triplet_acc {last.triplet_accuracy:.4f}")
    print(f"run directory: {out}")
    return 0


def cmd_eval(args, overrides) -> int:
    cfg, model = _model_from_args(args, overrides)
    pairs, triplets = _eval_sets(args, cfg)
    report = evaluate(model, pairs, triplets, cfg.loss.family)
    print(f"pair_auc {report.pair_auc!r}")
    print(f"triplet_acc {report.triplet_accuracy!r}")
    out = args.out or args.run
    if out:
        os.makedirs(out, exist_ok=True)
        scores = score_pairs(model, [(p.g1, p.g2) for p in pairs], cfg.loss.family)
        labels = [p.label for p in pairs]
        write_score_csv(os.path.join(out, "eval_scores.csv"), zip(scores, labels))
        _write_json(os.path.join(out, "eval_report.json"),
                    {"pair_auc": report.pair_auc, "triplet_acc": report.triplet_accuracy,
                     "num_pairs": len(pairs), "num_triplets": len(triplets)})
        if not args.no_plots:
            plotting.plot_score_distributions(scores, labels, os.path.join(out, "eval_scores.png"),
                                              title=cfg.model_kind)
    return 0


def cmd_wl_baseline(args, overrides) -> int:
    from .wl import best_by_pair_auc, wl_evaluate

    cfg = _config(args, overrides)
    pairs, triplets = _eval_sets(args, cfg)
    rows = wl_evaluate(pairs, triplets, args.max_T)
    best = best_by_pair_auc(rows)
    out = args.out or default_output_dir("wl-baseline")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "wl_sweep.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["T", "pair_auc", "triplet_acc"])
        for r in rows:
            w.writerow([r["T"], repr(r["pair_auc"]), repr(r["triplet_acc"])])
    labels = [p.label for p in pairs]
    write_score_csv(os.path.join(out, "wl_scores.csv"), zip(best["scores"], labels))
    _write_json(os.path.join(out, "wl_summary.json"),
                {"best_T": best["T"], "pair_auc": best["pair_auc"],
                 "triplet_acc": best["triplet_acc"]})
    if not args.no_plots:
        plotting.plot_wl_sweep(rows, os.path.join(out, "wl_sweep.png"))
        plotting.plot_score_distributions(best["scores"], labels,
                                          os.path.join(out, "wl_scores.png"),
                                          title=f"WL kernel, T={best['T']}")
    for r in rows:
        print(f"T={r['T']} pair_auc {r['pair_auc']:.4f} triplet_acc {r['triplet_acc']:.4f}")
    print(f"best T={best['T']} pair_auc {best['pair_auc']:.4f} "
          f"triplet_acc {best['triplet_acc']:.4f}")
    return 0


def _read_graph(path: str):
    with open(path) as f:
        try:
            return graph_from_obj(json.load(f), where=path)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"{path}: invalid JSON: {exc}") from None


def cmd_export_attention(args, overrides) -> int:
    from .attention_export import write_attention

    cfg, model = _model_from_args(args, overrides)
    if cfg.model_kind != "matching":
        raise UsageError("export-attention needs a matching-model checkpoint; "
                         "an embedding model has no cross-graph attention")
    if args.g1 or args.g2:
        if not (args.g1 and args.g2):
            raise UsageError("give both --g1 and --g2")
        g1, g2 = _read_graph(args.g1), _read_graph(args.g2)
    else:
        pairs, _ = _eval_sets(args, cfg)
        if not 0 <= args.pair_index < len(pairs):
            raise UsageError(f"--pair-index must be in [0, {len(pairs)})")
        g1, g2 = pairs[args.pair_index].g1, pairs[args.pair_index].g2
    result = model.match_graph_pair(g1, g2, record_attention=True, family=cfg.loss.family)
    out = args.out or default_output_dir("attention")
    files = write_attention(g1, g2, result.attention, out)
    if not args.no_plots:
        files.append(plotting.plot_attention(result.attention, os.path.join(out, "attention.png")))
    print(f"score {result.score!r}")
    print(f"wrote {len(files)} files to {out}")
    return 0


def cmd_gradcheck(args, overrides) -> int:
    from .gradcheck_suite import TOLERANCE, run_gradchecks

    failed = 0
    for r in run_gradchecks(seed=args.seed):
        status = "ok" if r.passed else "FAIL"
        failed += not r.passed
        print(f"{r.model_kind:9s} {r.family:7s} {r.mode:7s} max_rel_error {r.max_rel_error:.3e} "
              f"{status}")
    print(f"{'all passed' if not failed else f'{failed} failed'} (tolerance {TOLERANCE:g})")
    return 1 if failed else 0


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False, data=True):
        p.add_argument("--config", help="JSON config file (defaults apply for missing keys)")
        p.add_argument("--out", help=f"output directory (default under ${'{'}GRAPHSIM_OUTPUT_DIR{'}'})")
        if data:
            p.add_argument("--eval-data", help="directory written by gen-data")
        if model:
            p.add_argument("--run", help="run directory written by train")
            p.add_argument("--checkpoint", help="checkpoint file")
        p.add_argument("--no-plots", action="store_true", help="skip PNG figures")

    p = sub.add_parser("gen-data", help="write the fixed evaluation pairs and triplets")
    common(p, data=False)
    p.add_argument("--size", type=int, help="records per set (default: eval_size)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a model and write metrics, checkpoint and figures")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the fixed sets")
    common(p, model=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("wl-baseline", help="Weisfeiler-Lehman kernel baseline")
    common(p)
    p.add_argument("--max-T", type=int, default=5, help="largest WL iteration count to try")
    p.set_defaults(func=cmd_wl_baseline)

    p = sub.add_parser("export-attention", help="cross-graph attention as JSON, DOT and PNG")
    common(p, model=True)
    p.add_argument("--pair-index", type=int, default=0, help="eval pair to visualise")
    p.add_argument("--g1", help="graph JSON file (overrides --pair-index)")
    p.add_argument("--g2", help="graph JSON file")
    p.set_defaults(func=cmd_export_attention)

    p = sub.add_parser("gradcheck", help="finite-difference check of all model gradients")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def _split_overrides(parser: argparse.ArgumentParser, argv: list[str]):
    args, rest = parser.parse_known_args(argv)
    overrides, bad = [], []
    for item in rest:
        (overrides if item.startswith("--") and "=" in item else bad).append(item)
    if bad:
        parser.error(f"unrecognized arguments: {' '.join(bad)}")
    return args, [o[2:] for o in overrides]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, overrides = _split_overrides(parser, sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    if overrides and args.command == "gradcheck":
        parser.error("gradcheck takes no config overrides")
    try:
        return args.func(args, overrides)
    except (UsageError, ValueError, CheckpointError, OSError) as exc:
        print(f"graphsim {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
