#!/usr/bin/env python3
"""Train all agents in one environment and export the study artifacts:

- training history (JSON lines, one record per epoch),
- per-agent mean-action tables (the policy-analysis CSVs),
- per-epoch checkpoints for resuming.

Usage:
    python scripts/run_training_study.py --env education --epochs 40 \
        --episodes-per-epoch 100 --out results/education_study
"""

import argparse
import os

from fairsim.config import make_env
from fairsim.experiments import export_actions
from fairsim.trainer import EnvEvaluator, TrainConfig, train


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--env", required=True, choices=("loan", "healthcare", "education"))
    parser.add_argument("--config", default=None)
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--episodes-per-epoch", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results/study")
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    evaluator = EnvEvaluator(lambda: make_env(args.env, args.config), collect_actions=True)
    cfg = TrainConfig(epochs=args.epochs, episodes_per_epoch=args.episodes_per_epoch, seed=args.seed)
    result = train(evaluator, cfg, checkpoint_dir=os.path.join(args.out, "checkpoints"))

    history_path = os.path.join(args.out, f"history_{args.env}.jsonl")
    with open(history_path, "w", encoding="utf-8") as fh:
        for stats in result.history:
            fh.write(stats.to_json_line() + "\n")

    env = make_env(args.env, args.config)
    names = {spec.agent_id: spec.name for spec in env.agent_specs}
    paths = export_actions(result, args.out, args.env, names)
    print(f"history: {history_path}")
    for path in paths:
        print(f"actions: {path}")


if __name__ == "__main__":
    main()
