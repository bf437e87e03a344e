"""Command line entry point.

Subcommands:
  gen-data   write the three dataset split files for a configuration
  train      run one training job and write its run directory
  evaluate   re-score a finished run's checkpoint on the test split
  report     aggregate results.csv files under a directory tree
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ALGORITHMS, ENVIRONMENTS, load_config, parse_config
from .harness import (
    collect_report,
    fmt,
    generate_datasets,
    run_evaluation,
    run_training,
    write_csv,
)


def _add_common(p: argparse.ArgumentParser, seed_default=None) -> None:
    p.add_argument("--config", help="path to a config file (defaults apply if omitted)")
    p.add_argument("--seed", type=int, default=seed_default, help="override train.seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--env", choices=ENVIRONMENTS, help="override env.name")
    p.add_argument("--algo", choices=ALGORITHMS, help="override train.algo")


def _load(args) -> dict:
    cfg = load_config(args.config) if args.config else parse_config("")
    if args.env:
        cfg["env.name"] = args.env
    if args.algo:
        cfg["train.algo"] = args.algo
    if getattr(args, "seed", None) is not None:
        cfg["train.seed"] = args.seed
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="srlkit", description="structured combinatorial policy experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen-data", help="write dataset split files")
    _add_common(p_gen)

    p_train = sub.add_parser("train", help="train one configuration")
    _add_common(p_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a run's checkpoint")
    _add_common(p_eval)
    p_eval.add_argument(
        "--run", help="run directory holding checkpoint.npz (defaults to --out)"
    )

    p_rep = sub.add_parser("report", help="aggregate results under a directory")
    p_rep.add_argument("--out", required=True, help="directory tree to scan")

    args = parser.parse_args(argv)

    if args.command == "gen-data":
        paths = generate_datasets(_load(args), args.out)
        for path in paths:
            print(path)
        return 0

    if args.command == "train":
        cfg = _load(args)
        report = run_training(cfg, out_dir=args.out)
        print(
            f"{report.environment}/{report.algorithm} seed={report.seed} "
            f"best_episode={report.best_episode}"
        )
        for split, mean in report.split_means.items():
            print(f"  {split} mean reward: {mean:.4f}")
        print(f"  wrote {args.out}")
        return 0

    if args.command == "evaluate":
        cfg = _load(args)
        run_dir = args.run or args.out
        out_path = os.path.join(args.out, "eval.csv")
        os.makedirs(args.out, exist_ok=True)
        rows = run_evaluation(cfg, run_dir, out_path)
        mean = sum(r[4] for r in rows) / len(rows) if rows else float("nan")
        print(f"test mean reward: {mean:.4f} ({len(rows)} instances)")
        print(f"  wrote {out_path}")
        return 0

    if args.command == "report":
        summaries = collect_report(args.out)
        header = "run,algorithm,seed,split,instances,mean_reward,mean_delta_vs_greedy"
        write_csv(os.path.join(args.out, "report.csv"), header, summaries)
        print(header)
        for row in summaries:
            print(",".join(fmt(c) for c in row))
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
