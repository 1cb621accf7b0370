"""Command-line front end.

Subcommands: run, train, intervene, ablate, frontier, baselines.  All take
--env, --config (TOML), --seeds and --out; exit codes are 0 on success, 2
for configuration errors, 3 for environment contract errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import experiments
from .config import ConfigError, ENV_NAMES, make_env
from .core import ContractError, run_episode
from .trainer import EnvEvaluator, TrainConfig, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONTRACT = 3


def _parse_seeds(raw: str) -> list[int]:
    try:
        seeds = [int(s) for s in raw.split(",") if s.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"seeds must be a comma-separated list of integers, got {raw!r}") from exc
    if not seeds:
        raise ConfigError("at least one seed is required")
    return seeds


def _add_common(parser: argparse.ArgumentParser, env_required: bool = True) -> None:
    parser.add_argument("--env", choices=ENV_NAMES, required=env_required, help="environment name")
    parser.add_argument("--config", default=None, help="TOML configuration file")
    parser.add_argument("--seeds", default="0", help="comma-separated seed list")
    parser.add_argument("--out", default=None, help="output file or directory")


def _add_train_args(parser: argparse.ArgumentParser) -> None:
    # Defaults resolve in _train_config: flag > [train] table in --config > built-in.
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--episodes-per-epoch", type=int, default=None)
    parser.add_argument("--elite-fraction", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scored episodes under the passive baseline policies")
    _add_common(p_run)

    p_train = sub.add_parser("train", help="optimize all agents' policies")
    _add_common(p_train)
    _add_train_args(p_train)
    p_train.add_argument("--checkpoint-dir", default=None)
    p_train.add_argument("--export-actions", action="store_true", help="also write per-agent mean-action CSVs")

    p_int = sub.add_parser("intervene", help="paired fixed-intervention comparison")
    _add_common(p_int, env_required=False)
    p_int.add_argument("--name", required=True, help="catalog entry, e.g. loan/debt-relief-20pct")

    p_abl = sub.add_parser("ablate", help="train under the three objective-term combinations")
    _add_common(p_abl)
    _add_train_args(p_abl)

    p_fro = sub.add_parser("frontier", help="reward/fairness trade-off sweep over lambda")
    _add_common(p_fro)
    _add_train_args(p_fro)
    p_fro.add_argument("--lambdas", default="0.0,0.25,0.5,0.75,1.0", help="comma-separated lambda values")

    p_base = sub.add_parser("baselines", help="loan fixed/single-agent/multi-agent comparison")
    _add_common(p_base, env_required=False)
    _add_train_args(p_base)

    p_cat = sub.add_parser("catalog", help="list the intervention catalog")
    return parser


def _train_config(args, seed: int) -> TrainConfig:
    from .config import load_overrides

    table = {}
    if args.config is not None:
        table = load_overrides(args.config).get("train", {})
    try:
        return TrainConfig(
            epochs=args.epochs if args.epochs is not None else table.get("epochs", 40),
            episodes_per_epoch=args.episodes_per_epoch
            if args.episodes_per_epoch is not None
            else table.get("episodes_per_epoch", 100),
            elite_fraction=args.elite_fraction
            if args.elite_fraction is not None
            else table.get("elite_fraction", 0.2),
            sigma_floor=table.get("sigma_floor", 1e-4),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_run(args) -> int:
    seeds = _parse_seeds(args.seeds)
    lines = []
    for seed in seeds:
        env = make_env(args.env, args.config)
        policies = experiments.baseline_policies(args.env, env, seed)
        result = run_episode(env, policies, seed, env.default_success_spec())
        lines.append(result.to_json_line())
    payload = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_OK


def _cmd_train(args) -> int:
    seeds = _parse_seeds(args.seeds)
    for seed in seeds:
        evaluator = EnvEvaluator(
            lambda: make_env(args.env, args.config), collect_actions=args.export_actions
        )
        result = train(evaluator, _train_config(args, seed), checkpoint_dir=args.checkpoint_dir)
        if args.out:
            path = args.out if len(seeds) == 1 else f"{args.out}.seed{seed}"
            with open(path, "w", encoding="utf-8") as fh:
                for stats in result.history:
                    fh.write(stats.to_json_line() + "\n")
        else:
            for stats in result.history:
                sys.stdout.write(stats.to_json_line() + "\n")
        if args.export_actions and args.out:
            env = make_env(args.env, args.config)
            names = {spec.agent_id: spec.name for spec in env.agent_specs}
            experiments.export_actions(result, f"{args.out}.actions", args.env, names)
    return EXIT_OK


def _cmd_intervene(args) -> int:
    seeds = _parse_seeds(args.seeds)
    results = experiments.run_intervention(args.name, seeds, config_path=args.config, out_path=args.out)
    if not args.out:
        for seed, arms in results.items():
            summary = {
                "seed": seed,
                "baseline_final": arms["baseline"][-1],
                "intervened_final": arms["intervened"][-1],
            }
            sys.stdout.write(json.dumps(summary) + "\n")
    return EXIT_OK


def _cmd_ablate(args) -> int:
    seeds = _parse_seeds(args.seeds)
    experiments.run_ablation(args.env, _train_config(args, seeds[0]), config_path=args.config, out_dir=args.out or ".")
    return EXIT_OK


def _cmd_frontier(args) -> int:
    seeds = _parse_seeds(args.seeds)
    lambdas = [float(x) for x in args.lambdas.split(",") if x.strip() != ""]
    points = experiments.run_frontier(
        args.env, lambdas, seeds, _train_config(args, seeds[0]), config_path=args.config, out_path=args.out
    )
    if not args.out:
        for point in points:
            sys.stdout.write(json.dumps(point) + "\n")
    return EXIT_OK


def _cmd_baselines(args) -> int:
    seeds = _parse_seeds(args.seeds)
    results = experiments.run_baselines(seeds, _train_config(args, seeds[0]), config_path=args.config, out_path=args.out)
    if not args.out:
        sys.stdout.write(json.dumps(results, indent=2) + "\n")
    return EXIT_OK


def _cmd_catalog(args) -> int:
    for name, spec in sorted(experiments.INTERVENTIONS.items()):
        sys.stdout.write(f"{name}\t{spec.indicator}\t{spec.description}\n")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "train": _cmd_train,
    "intervene": _cmd_intervene,
    "ablate": _cmd_ablate,
    "frontier": _cmd_frontier,
    "baselines": _cmd_baselines,
    "catalog": _cmd_catalog,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except ContractError as exc:
        sys.stderr.write(f"environment contract error: {exc}\n")
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
