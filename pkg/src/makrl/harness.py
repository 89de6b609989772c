"""Training, testing, and Monte-Carlo orchestration for the particle world.

Runs are fully decentralized: each agent owns a learner, an RBF bank, and an
RNG stream, and never sees another agent's state.  Seeds derive from the
master seed by a splitmix-style hash so that run i and agent j get the same
streams regardless of execution order.  Metrics append to CSV incrementally
so interrupted runs keep their partial data.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import yaml

from .env import DT, SCENARIO_NAMES, STEP_CAP, SHAPING_COEF, make_scenario
from .features import make_bank, loss as squared_loss
from .maksr import DEFAULT_SR_MEASUREMENT_NOISE, MakSrLearner
from .maktd import (
    DEFAULT_GAMMA,
    DEFAULT_PRIOR_COV,
    DEFAULT_PROCESS_NOISE,
    DEFAULT_R_CANDIDATES,
    MakTdLearner,
    Transition,
)

LEARNER_KINDS = ("mak_td", "mak_sr")

_MASK64 = (1 << 64) - 1
# Tags keep env streams clear of the small agent-index space.
_TRAIN_ENV_TAG = 1 << 32
_TEST_ENV_TAG = (1 << 32) + 1


def hash64(seed: int, index: int) -> int:
    """Order-independent seed derivation: mix(seed) xor-folded with index,
    then remixed (splitmix64 finalizer)."""

    def mix(z: int) -> int:
        z = (z + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    return mix(mix(seed & _MASK64) ^ ((index & _MASK64) * 0x9E3779B97F4A7C15 & _MASK64))


@dataclass
class RunConfig:
    """One experiment: scenario, learner kind, episode budgets, and the
    numeric defaults of the learning machinery."""

    scenario: str = "predator_prey_1v2"
    learner: str = "mak_td"
    episodes_train: int = 1000
    episodes_test: int = 1000
    mc_runs: int = 10
    master_seed: int = 0
    gamma: float = DEFAULT_GAMMA
    process_noise: float = DEFAULT_PROCESS_NOISE
    prior_cov: float = DEFAULT_PRIOR_COV
    r_candidates: tuple = DEFAULT_R_CANDIDATES
    dt: float = DT
    rbf_count: int = 9
    rate_mean: float = 1e-3
    rate_cov: float = 1e-3
    likelihood: str = "full"
    greedy_mix: float = 0.0
    sr_measurement_noise: float = DEFAULT_SR_MEASUREMENT_NOISE
    sr_adaptive_noise: bool = False
    step_cap: int = STEP_CAP
    shaping_coef: float = SHAPING_COEF
    out_dir: str = "runs"

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIO_NAMES:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.learner not in LEARNER_KINDS:
            raise ValueError(f"unknown learner {self.learner!r}")
        if self.episodes_train < 1 or self.episodes_test < 1:
            raise ValueError("episode counts must be >= 1")
        if self.mc_runs < 1:
            raise ValueError("mc_runs must be >= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        self.r_candidates = tuple(float(r) for r in self.r_candidates)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["r_candidates"] = list(self.r_candidates)
        return d

    @classmethod
    def from_dict(cls, values: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict | None = None) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError(f"config file {path} must hold a key-value mapping")
        if overrides:
            data.update(overrides)
        return cls.from_dict(data)


@dataclass
class EpisodeRecord:
    """Per-episode aggregates: the row unit of the metrics CSV."""

    episode: int
    phase: str  # train | test
    steps: int
    collisions: int
    out_of_bounds: int
    returns: np.ndarray  # per-agent discounted return
    losses: np.ndarray  # per-agent summed squared prediction error


@dataclass
class RunResult:
    run_index: int
    run_seed: int
    train_records: list[EpisodeRecord]
    test_records: list[EpisodeRecord]


@dataclass
class MonteCarloResult:
    summary: dict
    runs: list[RunResult]


class MetricsWriter:
    """Append-only CSV sink; one EpisodeRecord per line, floats at 9
    significant digits."""

    def __init__(self, path: str | Path, n_agents: int, fresh: bool = False) -> None:
        self.path = Path(path)
        self.n_agents = n_agents
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if fresh or not self.path.exists() or self.path.stat().st_size == 0:
            header = ["episode", "phase", "steps", "collisions", "out_of_bounds"]
            header += [f"return_{i}" for i in range(n_agents)]
            header += [f"loss_{i}" for i in range(n_agents)]
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                csv.writer(fh).writerow(header)

    def write(self, record: EpisodeRecord) -> None:
        row = [
            record.episode,
            record.phase,
            record.steps,
            record.collisions,
            record.out_of_bounds,
        ]
        row += [f"{x:.9g}" for x in record.returns]
        row += [f"{x:.9g}" for x in record.losses]
        with open(self.path, "a", encoding="utf-8", newline="") as fh:
            csv.writer(fh).writerow(row)


def build_learners(config: RunConfig, world, run_seed: int) -> list:
    """One learner per agent, each with its own seeded RNG and RBF bank."""
    learners = []
    for i in range(world.n_agents):
        rng = np.random.default_rng(hash64(run_seed, i))
        low, high = world.observation_bounds(i)
        bank = make_bank(
            config.rbf_count,
            low,
            high,
            rng,
            rate_mean=config.rate_mean,
            rate_cov=config.rate_cov,
        )
        if config.learner == "mak_td":
            learner = MakTdLearner(
                bank=bank,
                n_actions=world.n_actions,
                rng=rng,
                gamma=config.gamma,
                r_candidates=config.r_candidates,
                process_noise=config.process_noise,
                prior_cov=config.prior_cov,
                likelihood=config.likelihood,
                greedy_mix=config.greedy_mix,
            )
        else:
            # The adaptive SR-noise mode mirrors the reward pathway and
            # therefore borrows its candidate set.
            sr_noise = (
                config.r_candidates
                if config.sr_adaptive_noise
                else config.sr_measurement_noise
            )
            learner = MakSrLearner(
                bank=bank,
                n_actions=world.n_actions,
                rng=rng,
                gamma=config.gamma,
                r_candidates=config.r_candidates,
                process_noise=config.process_noise,
                prior_cov=config.prior_cov,
                sr_measurement_noise=sr_noise,
                sr_adaptive_noise=config.sr_adaptive_noise,
                likelihood=config.likelihood,
                greedy_mix=config.greedy_mix,
            )
        learners.append(learner)
    return learners


def _make_world(config: RunConfig):
    world = make_scenario(
        config.scenario,
        seed=None,
        step_cap=config.step_cap,
        shaping_coef=config.shaping_coef,
    )
    world.state.dt = config.dt
    return world


def _check_finite(record: EpisodeRecord) -> None:
    if not (np.all(np.isfinite(record.returns)) and np.all(np.isfinite(record.losses))):
        raise RuntimeError(
            f"non-finite metric in {record.phase} episode {record.episode}: "
            f"returns={record.returns}, losses={record.losses}"
        )


def _terminal_for_learner(outcome) -> bool:
    # Event endings are true terminations; hitting the step cap merely
    # truncates, so the learner keeps bootstrapping from the next state.
    return outcome.done and any(
        ev.kind in ("out_of_bounds", "interception") for ev in outcome.events
    )


def run_training(
    config: RunConfig,
    run_index: int = 0,
    writer: MetricsWriter | None = None,
) -> tuple[list[EpisodeRecord], list]:
    """Train fresh learners for episodes_train episodes; returns records and
    the trained learners."""
    run_seed = hash64(config.master_seed, run_index)
    world = _make_world(config)
    learners = build_learners(config, world, run_seed)
    env_stream = np.random.default_rng(hash64(run_seed, _TRAIN_ENV_TAG))

    records: list[EpisodeRecord] = []
    for episode in range(config.episodes_train):
        obs = world.reset(int(env_stream.integers(1 << 63)))
        returns = np.zeros(world.n_agents)
        losses = np.zeros(world.n_agents)
        discount = 1.0
        steps = collisions = oob = 0
        done = False
        while not done:
            actions = [
                learner.select_action_explore(obs[i])
                for i, learner in enumerate(learners)
            ]
            outcome = world.step(actions)
            terminal = _terminal_for_learner(outcome)
            for i, learner in enumerate(learners):
                diag = learner.train_step(
                    Transition(
                        obs=obs[i],
                        action=actions[i],
                        reward=float(outcome.rewards[i]),
                        next_obs=outcome.observations[i],
                        terminal=terminal,
                    )
                )
                losses[i] += diag.loss
            returns += discount * outcome.rewards
            discount *= config.gamma
            steps += 1
            collisions += sum(ev.kind == "interception" for ev in outcome.events)
            oob += sum(ev.kind == "out_of_bounds" for ev in outcome.events)
            obs = outcome.observations
            done = outcome.done
        record = EpisodeRecord(
            episode=episode,
            phase="train",
            steps=steps,
            collisions=collisions,
            out_of_bounds=oob,
            returns=returns,
            losses=losses,
        )
        _check_finite(record)
        records.append(record)
        if writer is not None:
            writer.write(record)
    return records, learners


def run_testing(
    config: RunConfig,
    learners: list,
    run_index: int = 0,
    writer: MetricsWriter | None = None,
) -> list[EpisodeRecord]:
    """Greedy-policy evaluation; learners are read, never mutated."""
    run_seed = hash64(config.master_seed, run_index)
    world = _make_world(config)
    env_stream = np.random.default_rng(hash64(run_seed, _TEST_ENV_TAG))

    records: list[EpisodeRecord] = []
    for episode in range(config.episodes_test):
        obs = world.reset(int(env_stream.integers(1 << 63)))
        returns = np.zeros(world.n_agents)
        losses = np.zeros(world.n_agents)
        discount = 1.0
        steps = collisions = oob = 0
        done = False
        while not done:
            actions = [
                learner.greedy_action(obs[i]) for i, learner in enumerate(learners)
            ]
            outcome = world.step(actions)
            for i, learner in enumerate(learners):
                phi = learner.bank.state_action_features(
                    obs[i], actions[i], world.n_actions
                )
                losses[i] += squared_loss(
                    phi, learner.theta, float(outcome.rewards[i])
                )
            returns += discount * outcome.rewards
            discount *= config.gamma
            steps += 1
            collisions += sum(ev.kind == "interception" for ev in outcome.events)
            oob += sum(ev.kind == "out_of_bounds" for ev in outcome.events)
            obs = outcome.observations
            done = outcome.done
        record = EpisodeRecord(
            episode=episode,
            phase="test",
            steps=steps,
            collisions=collisions,
            out_of_bounds=oob,
            returns=returns,
            losses=losses,
        )
        _check_finite(record)
        records.append(record)
        if writer is not None:
            writer.write(record)
    return records


def aggregate_records(records: list[EpisodeRecord]) -> dict:
    """Per-run scalars: episode-and-agent means of loss and discounted
    return, episode mean of steps."""
    loss = float(np.mean([np.mean(r.losses) for r in records]))
    reward = float(np.mean([np.mean(r.returns) for r in records]))
    steps = float(np.mean([r.steps for r in records]))
    return {"loss": loss, "reward": reward, "steps": steps}


def monte_carlo(config: RunConfig, keep_runs: bool = True) -> MonteCarloResult:
    """Repeat train+test mc_runs times with derived seeds; summarize the
    test-phase aggregates."""
    per_run = []
    runs: list[RunResult] = []
    seeds = []
    for run_index in range(config.mc_runs):
        run_seed = hash64(config.master_seed, run_index)
        seeds.append(run_seed)
        train_records, learners = run_training(config, run_index=run_index)
        test_records = run_testing(config, learners, run_index=run_index)
        per_run.append(aggregate_records(test_records))
        if keep_runs:
            runs.append(
                RunResult(
                    run_index=run_index,
                    run_seed=run_seed,
                    train_records=train_records,
                    test_records=test_records,
                )
            )
    summary = {
        "scenario": config.scenario,
        "learner": config.learner,
        "loss_mean": float(np.mean([r["loss"] for r in per_run])),
        "loss_std": float(np.std([r["loss"] for r in per_run])),
        "reward_mean": float(np.mean([r["reward"] for r in per_run])),
        "reward_std": float(np.std([r["reward"] for r in per_run])),
        "steps_mean": float(np.mean([r["steps"] for r in per_run])),
        "steps_std": float(np.std([r["steps"] for r in per_run])),
        "seeds": ";".join(str(s) for s in seeds),
    }
    return MonteCarloResult(summary=summary, runs=runs)


SUMMARY_COLUMNS = (
    "scenario",
    "learner",
    "loss_mean",
    "loss_std",
    "reward_mean",
    "reward_std",
    "steps_mean",
    "steps_std",
    "seeds",
)


def write_summary_csv(path: str | Path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(
                [
                    f"{row[c]:.9g}" if isinstance(row[c], float) else row[c]
                    for c in SUMMARY_COLUMNS
                ]
            )


def format_summary_table(rows: list[dict]) -> str:
    """Pretty-printed text table of Monte-Carlo summaries."""
    cells = [[str(c) for c in SUMMARY_COLUMNS]]
    for row in rows:
        cells.append(
            [
                f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c])
                for c in SUMMARY_COLUMNS
            ]
        )
    widths = [max(len(r[j]) for r in cells) for j in range(len(SUMMARY_COLUMNS))]
    lines = []
    for idx, r in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def save_run_config(path: str | Path, config: RunConfig) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True)


__all__ = [
    "RunConfig",
    "EpisodeRecord",
    "RunResult",
    "MonteCarloResult",
    "MetricsWriter",
    "hash64",
    "build_learners",
    "run_training",
    "run_testing",
    "aggregate_records",
    "monte_carlo",
    "write_summary_csv",
    "format_summary_table",
    "save_run_config",
    "SUMMARY_COLUMNS",
    "LEARNER_KINDS",
]
