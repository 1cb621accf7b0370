#!/usr/bin/env python3
"""Sweep the reward-fairness trade-off weight and emit the frontier points.

Each lambda trains one model per seed with alpha_k = lambda/K and
beta_m = (1-lambda)/M, then evaluates the final policy; the CSV holds one
(mean normalized reward sum, mean fairness violation sum) pair per lambda.

Usage:
    python scripts/run_frontier_sweep.py --env loan --lambdas 0,0.25,0.5,0.75,1 \
        --seeds 0,1,2 --out results/loan_frontier.csv
"""

import argparse

from fairsim.experiments import run_frontier
from fairsim.trainer import TrainConfig


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--env", required=True, choices=("loan", "healthcare", "education"))
    parser.add_argument("--config", default=None)
    parser.add_argument("--lambdas", default="0,0.25,0.5,0.75,1")
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--episodes-per-epoch", type=int, default=30)
    parser.add_argument("--out", default="results/frontier.csv")
    args = parser.parse_args()

    points = run_frontier(
        args.env,
        lambdas=[float(x) for x in args.lambdas.split(",")],
        seeds=[int(s) for s in args.seeds.split(",")],
        train_cfg=TrainConfig(epochs=args.epochs, episodes_per_epoch=args.episodes_per_epoch),
        config_path=args.config,
        out_path=args.out,
    )
    for point in points:
        print(point)


if __name__ == "__main__":
    main()
