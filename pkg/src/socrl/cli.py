"""Command-line entry point.

Subcommands: train, eval, pretrain, sweep, oracle.  Exit codes: 0 success,
2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .harness.config import ConfigError, load_config
from .harness.experiment import evaluate, pretrain, run_experiment
from .harness.sweeps import sweep_act_interval, sweep_comm_penalty, sweep_comm_reward

SWEEPS = {
    "comm_bonus": sweep_comm_reward,
    "comm_penalty": sweep_comm_penalty,
    "act_interval": sweep_act_interval,
}


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None,
                        help="run one specific seed")
    parser.add_argument("--seeds", type=int, default=None, metavar="N",
                        help="run seeds 0..N-1")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (overrides the config)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socrl",
        description="Train and evaluate decomposed multi-agent systems on "
                    "the shipped gridworld tasks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run train/eval epochs, write metrics and tables")
    p_train.add_argument("config", type=Path)
    p_train.add_argument("--tables", type=Path, default=None,
                         help="directory of pre-trained tables to start from")
    p_train.add_argument("--freeze", default="",
                         help="comma-separated groups to keep frozen")
    _common(p_train)

    p_eval = sub.add_parser("eval", help="evaluation-only epochs from saved tables")
    p_eval.add_argument("config", type=Path)
    p_eval.add_argument("--tables", type=Path, required=True)
    _common(p_eval)

    p_pre = sub.add_parser("pretrain", help="train a group under a random behavior policy")
    p_pre.add_argument("config", type=Path)
    p_pre.add_argument("--group", choices=("fruits", "ghosts", "both"), required=True)
    p_pre.add_argument("--steps", type=int, required=True)
    _common(p_pre)

    p_sweep = sub.add_parser("sweep", help="run one experiment per parameter value")
    p_sweep.add_argument("config", type=Path)
    p_sweep.add_argument("--param", choices=sorted(SWEEPS), required=True)
    p_sweep.add_argument("--values", nargs="+", type=float, required=True)
    _common(p_sweep)

    p_oracle = sub.add_parser("oracle", help="solve a text-format MDP by value iteration")
    p_oracle.add_argument("mdp_file", type=Path)
    p_oracle.add_argument("--gamma", type=float, required=True)
    p_oracle.add_argument("--tol", type=float, default=1e-9)
    _common(p_oracle)
    return parser


def _load(args) -> "ExperimentConfig":
    cfg = load_config(args.config)
    if args.seed is not None and args.seeds is not None:
        raise ConfigError("--seed and --seeds are mutually exclusive")
    if args.seed is not None:
        cfg = replace(cfg, seeds=(args.seed,))
    elif args.seeds is not None:
        cfg = replace(cfg, seeds=tuple(range(args.seeds)))
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    return cfg


def _run(args) -> int:
    if args.command == "oracle":
        from .mdp import TabularMdp, value_iteration
        try:
            mdp = TabularMdp.load(args.mdp_file)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        table = value_iteration(mdp, args.gamma, args.tol)
        lines = [f"{s} {a} {table.values[s, a]!r}"
                 for s in range(table.n_states) for a in range(table.n_actions)]
        text = "\n".join(lines) + "\n"
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "oracle_q.txt").write_text(text)
        else:
            sys.stdout.write(text)
        return 0

    cfg = _load(args)
    if args.command == "train":
        freeze = tuple(g for g in args.freeze.split(",") if g)
        run_experiment(cfg, tables_dir=args.tables, freeze=freeze)
    elif args.command == "eval":
        evaluate(cfg, args.tables)
    elif args.command == "pretrain":
        pretrain(cfg, args.group, args.steps, out_dir=cfg.out)
    elif args.command == "sweep":
        values = args.values
        if args.param == "act_interval":
            values = [int(v) for v in values]
        SWEEPS[args.param](cfg, values)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
