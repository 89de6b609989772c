"""Train both learner kinds on one scenario and print per-seed trends.

For every seed the script reports the mean per-episode discounted return and
squared prediction loss over the first and last window of training episodes,
plus the across-seed counts of improving runs.  Useful for judging whether a
configuration learns at all before committing to a long sweep.

Example:
    python scripts/run_trend_benchmark.py --episodes 300 --seeds 3 --window 50
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from makrl.env import SCENARIO_NAMES
from makrl.harness import RunConfig, run_training


def window_means(records, window: int) -> tuple[float, float, float, float]:
    rets = np.array([float(np.mean(r.returns)) for r in records])
    losses = np.array([float(np.mean(r.losses)) for r in records])
    return (
        float(rets[:window].mean()),
        float(rets[-window:].mean()),
        float(losses[:window].mean()),
        float(losses[-window:].mean()),
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", choices=SCENARIO_NAMES,
                        default="predator_prey_1v2")
    parser.add_argument("--episodes", type=int, default=1000)
    parser.add_argument("--seeds", type=int, default=10, help="independent runs")
    parser.add_argument("--window", type=int, default=100,
                        help="episodes in the first/last comparison windows")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    args = parser.parse_args()
    if args.episodes < 2 * args.window:
        parser.error("--episodes must be at least twice --window")

    header = (
        f"{'learner':8s} {'seed':>4s} {'ret first':>10s} {'ret last':>10s} "
        f"{'loss first':>11s} {'loss last':>11s}"
    )
    for kind in ("mak_td", "mak_sr"):
        config = RunConfig(
            scenario=args.scenario,
            learner=kind,
            episodes_train=args.episodes,
            master_seed=args.seed,
        )
        print(header)
        ret_up = loss_down = 0
        t0 = time.perf_counter()
        for run_index in range(args.seeds):
            records, _ = run_training(config, run_index=run_index)
            rf, rl, lf, ll = window_means(records, args.window)
            ret_up += int(rl > rf)
            loss_down += int(ll < lf)
            print(
                f"{kind:8s} {run_index:4d} {rf:10.4f} {rl:10.4f} "
                f"{lf:11.2f} {ll:11.2f}"
            )
        print(
            f"{kind}: return up in {ret_up}/{args.seeds} seeds, "
            f"loss down in {loss_down}/{args.seeds} seeds "
            f"({time.perf_counter() - t0:.0f}s)\n"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
