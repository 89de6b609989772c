"""Monte-Carlo sweep of one learner kind across every scenario.

Runs the train/test/aggregate pipeline for each scenario, prints the combined
summary table, and optionally saves it as CSV.

Example:
    python scripts/sweep_scenarios.py --learner mak_td --episodes 200 \
        --mc-runs 3 --out /tmp/sweep.csv
"""

from __future__ import annotations

import argparse

from makrl.env import SCENARIO_NAMES
from makrl.harness import (
    RunConfig,
    format_summary_table,
    monte_carlo,
    write_summary_csv,
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--learner", choices=("mak_td", "mak_sr"),
                        default="mak_td")
    parser.add_argument("--episodes", type=int, default=500,
                        help="training episodes per run")
    parser.add_argument("--test-episodes", type=int, default=100)
    parser.add_argument("--mc-runs", type=int, default=5,
                        help="independent runs per scenario")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", default=None, help="optional summary CSV path")
    args = parser.parse_args()

    rows = []
    for scenario in SCENARIO_NAMES:
        config = RunConfig(
            scenario=scenario,
            learner=args.learner,
            episodes_train=args.episodes,
            episodes_test=args.test_episodes,
            mc_runs=args.mc_runs,
            master_seed=args.seed,
        )
        result = monte_carlo(config)
        rows.append(result.summary)
        print(f"finished {scenario}")

    print(format_summary_table(rows))
    if args.out is not None:
        write_summary_csv(args.out, rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
