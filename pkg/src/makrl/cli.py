"""Command-line interface: train, eval, mc, scenarios, inspect-checkpoint.

Exit codes: 0 success, 1 usage/input error (bad flags, malformed config,
unknown scenario, missing checkpoint), 2 runtime failure.  Flag values
override config-file values, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .checkpoint import inspect_checkpoint, load_checkpoint, save_checkpoint
from .env import SCENARIO_NAMES, make_scenario
from .harness import (
    MetricsWriter,
    RunConfig,
    aggregate_records,
    format_summary_table,
    monte_carlo,
    run_testing,
    run_training,
    save_run_config,
    write_summary_csv,
)

log = logging.getLogger("makrl")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage errors via exception so main can
    map them to exit code 1 (argparse's default would be 2)."""

    def error(self, message: str) -> None:  # noqa: D401 - argparse hook
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


# CLI flag name -> RunConfig field.
_FLAG_FIELDS = {
    "scenario": "scenario",
    "learner": "learner",
    "episodes": "episodes_train",
    "test_episodes": "episodes_test",
    "mc_runs": "mc_runs",
    "seed": "master_seed",
    "rbf_count": "rbf_count",
    "gamma": "gamma",
    "likelihood": "likelihood",
    "out": "out_dir",
}


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", choices=SCENARIO_NAMES)
    parser.add_argument("--learner", choices=("mak_td", "mak_sr"))
    parser.add_argument("--episodes", type=int, help="training episodes")
    parser.add_argument("--test-episodes", type=int, help="testing episodes")
    parser.add_argument("--mc-runs", type=int, help="Monte-Carlo repetitions")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--config", type=str, help="YAML config file")
    parser.add_argument("--out", type=str, help="output directory")
    parser.add_argument("--rbf-count", type=int, help="RBFs per action block")
    parser.add_argument("--gamma", type=float, help="discount factor")
    parser.add_argument(
        "--likelihood",
        choices=("full", "exponential_only"),
        help="innovation likelihood used for noise-model weights",
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="makrl", description=__doc__)
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="increase log detail"
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_train = sub.add_parser("train", help="train learners, write metrics + checkpoint")
    _add_run_flags(p_train)

    p_eval = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    p_eval.add_argument("checkpoint", type=str, help="checkpoint .npz path")
    _add_run_flags(p_eval)

    p_mc = sub.add_parser("mc", help="Monte-Carlo sweep with derived seeds")
    _add_run_flags(p_mc)
    p_mc.add_argument("--json", action="store_true", help="print summary as JSON")

    p_sc = sub.add_parser("scenarios", help="list scenario presets")
    p_sc.add_argument("--json", action="store_true", help="print as JSON")

    p_ins = sub.add_parser(
        "inspect-checkpoint", help="print checkpoint dimensions and provenance"
    )
    p_ins.add_argument("checkpoint", type=str, help="checkpoint .npz path")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for flag, fieldname in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[fieldname] = value
    if getattr(args, "config", None):
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.from_dict(overrides)


def _scenario_inventory() -> list[dict]:
    inventory = []
    for name in SCENARIO_NAMES:
        world = make_scenario(name, seed=0)
        groups: list[dict] = []
        for spec in world.specs:
            if groups and groups[-1]["role"] == spec.role:
                groups[-1]["count"] += 1
            else:
                groups.append(
                    {"role": spec.role, "count": 1, "obs_dim": spec.obs_dim}
                )
        inventory.append(
            {"name": name, "agents": groups, "landmarks": world.n_landmarks}
        )
    return inventory


_PLURALS = {
    "predator": "predators",
    "prey": "prey",
    "cooperator": "cooperators",
    "competitor": "competitors",
}


def _scenario_line(entry: dict) -> str:
    parts = []
    for g in entry["agents"]:
        role = g["role"] if g["count"] == 1 else _PLURALS[g["role"]]
        parts.append(f"{g['count']} {role} (obs {g['obs_dim']})")
    if entry["landmarks"]:
        n = entry["landmarks"]
        parts.append(f"{n} landmark" + ("s" if n > 1 else ""))
    return f"{entry['name']}: " + ", ".join(parts)


def _cmd_scenarios(args: argparse.Namespace) -> int:
    inventory = _scenario_inventory()
    if args.json:
        print(json.dumps(inventory, indent=2))
    else:
        for entry in inventory:
            print(_scenario_line(entry))
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_run_config(out / "config.yaml", config)
    writer = MetricsWriter(out / "train_metrics.csv", _n_agents(config), fresh=True)
    log.info("training %s/%s for %d episodes", config.scenario, config.learner,
             config.episodes_train)
    records, learners = run_training(config, writer=writer)
    save_checkpoint(out / "checkpoint.npz", config, learners)
    agg = aggregate_records(records)
    print(
        f"trained {config.learner} on {config.scenario}: "
        f"loss {agg['loss']:.6g}, reward {agg['reward']:.6g}, "
        f"steps {agg['steps']:.6g} "
        f"(metrics: {out / 'train_metrics.csv'}, checkpoint: {out / 'checkpoint.npz'})"
    )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    meta, learners = load_checkpoint(args.checkpoint)
    overrides = {}
    for flag, fieldname in _FLAG_FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[fieldname] = value
    merged = dict(meta["config"])
    merged.update(overrides)
    config = RunConfig.from_dict(merged)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    writer = MetricsWriter(out / "test_metrics.csv", len(learners), fresh=True)
    records = run_testing(
        config, learners, run_index=meta.get("run_index", 0), writer=writer
    )
    agg = aggregate_records(records)
    print(
        f"evaluated {config.learner} on {config.scenario}: "
        f"loss {agg['loss']:.6g}, reward {agg['reward']:.6g}, "
        f"steps {agg['steps']:.6g} (metrics: {out / 'test_metrics.csv'})"
    )
    return 0


def _cmd_mc(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = monte_carlo(config, keep_runs=False)
    rows = [result.summary]
    write_summary_csv(out / "mc_summary.csv", rows)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(format_summary_table(rows))
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    info = inspect_checkpoint(args.checkpoint)
    print(f"format version: {info['format_version']}")
    print(f"learner: {info['learner']}")
    print(f"scenario: {info['scenario']}")
    print(f"agents: {info['n_agents']}")
    for agent in info["agents"]:
        sr = ", with SR matrix" if agent["has_sr"] else ""
        print(
            f"  agent {agent['index']}: theta dim {agent['theta_dim']}, "
            f"{agent['n_rbf']} RBFs over obs dim {agent['obs_dim']}{sr}"
        )
    print("config provenance:")
    for key, value in sorted(info["config"].items()):
        print(f"  {key}: {value}")
    return 0


def _n_agents(config: RunConfig) -> int:
    return make_scenario(config.scenario, seed=0).n_agents


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "mc": _cmd_mc,
    "scenarios": _cmd_scenarios,
    "inspect-checkpoint": _cmd_inspect,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.verb](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"makrl: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        log.exception("runtime failure")
        print(f"makrl: runtime failure: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
