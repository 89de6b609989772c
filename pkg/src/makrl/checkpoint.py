"""Versioned checkpoint container for trained learners.

Format: NumPy ``.npz`` archive, no pickled objects.  Field order:

- ``format_version``: int array, currently 1
- ``meta``: JSON string with learner kind, scenario, agent count, run index,
  and the full run configuration (provenance)
- per agent ``i``:
  - ``agent{i}_theta``: value/reward weights (L,)
  - ``agent{i}_weights``: measurement-noise model weights (M,)
  - ``agent{i}_bank_means``: RBF centers (n_rbf, obs_dim)
  - ``agent{i}_bank_covs``: RBF covariances (n_rbf, obs_dim, obs_dim)
  - ``agent{i}_bank_rates``: [rate_mean, rate_cov]
  - mak_td: ``agent{i}_p_theta`` (L, L)
  - mak_sr: ``agent{i}_m`` (L*L,), plus with ``include_covariances``
    ``agent{i}_sr_w`` (L, L) and ``agent{i}_p_theta`` (L, L)

mak_sr checkpoints omit covariances by default: P_m alone is L^2 x L^2
(50 MB at L = 50 if materialized densely).  Loading without covariances
restores fresh prior covariances, which is sufficient for greedy evaluation.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .features import RbfBank
from .maksr import MakSrLearner
from .maktd import MakTdLearner

FORMAT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    config,
    learners: list,
    run_index: int = 0,
    include_covariances: bool = False,
) -> None:
    """Write learners plus config provenance to an .npz archive."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    kind = "mak_sr" if isinstance(learners[0], MakSrLearner) else "mak_td"
    meta = {
        "learner": kind,
        "scenario": config.scenario,
        "n_agents": len(learners),
        "run_index": run_index,
        "config": config.to_dict(),
        "include_covariances": bool(include_covariances or kind == "mak_td"),
    }
    arrays: dict[str, np.ndarray] = {
        "format_version": np.array(FORMAT_VERSION),
        "meta": np.array(json.dumps(meta)),
    }
    for i, learner in enumerate(learners):
        arrays[f"agent{i}_theta"] = learner.theta
        arrays[f"agent{i}_weights"] = learner.last_weights
        arrays[f"agent{i}_bank_means"] = learner.bank.means
        arrays[f"agent{i}_bank_covs"] = learner.bank.covariances
        arrays[f"agent{i}_bank_rates"] = np.array(
            [learner.bank.rate_mean, learner.bank.rate_cov]
        )
        if kind == "mak_td":
            arrays[f"agent{i}_p_theta"] = learner.p_theta
        else:
            arrays[f"agent{i}_m"] = learner.m
            if include_covariances:
                arrays[f"agent{i}_sr_w"] = learner.sr_filter.w
                arrays[f"agent{i}_p_theta"] = learner.p_theta
    np.savez(path, **arrays)


def _require(archive, key: str):
    if key not in archive:
        raise ValueError(f"checkpoint missing field {key!r}")
    return archive[key]


def load_checkpoint(path: str | Path):
    """Read an archive back into (meta dict, learner list)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        version = int(_require(archive, "format_version"))
        if version != FORMAT_VERSION:
            raise ValueError(
                f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
            )
        meta = json.loads(str(_require(archive, "meta")))
        # Imported here to avoid a circular module dependency at import time.
        from .harness import RunConfig, hash64

        config = RunConfig.from_dict(meta["config"])
        run_seed = hash64(config.master_seed, meta.get("run_index", 0))
        learners = []
        for i in range(meta["n_agents"]):
            rng = np.random.default_rng(hash64(run_seed, i))
            bank = RbfBank(
                means=_require(archive, f"agent{i}_bank_means"),
                covariances=_require(archive, f"agent{i}_bank_covs"),
                rate_mean=float(archive[f"agent{i}_bank_rates"][0]),
                rate_cov=float(archive[f"agent{i}_bank_rates"][1]),
            )
            theta = _require(archive, f"agent{i}_theta")
            common = dict(
                bank=bank,
                n_actions=int(theta.shape[0]) // bank.block_size,
                rng=rng,
                gamma=config.gamma,
                r_candidates=config.r_candidates,
                process_noise=config.process_noise,
                prior_cov=config.prior_cov,
                likelihood=config.likelihood,
                greedy_mix=config.greedy_mix,
            )
            if meta["learner"] == "mak_td":
                learner = MakTdLearner(**common)
                learner.theta = theta
                learner.filter.p = _require(archive, f"agent{i}_p_theta")
                learner.filter.weights = _require(archive, f"agent{i}_weights")
            else:
                # Adaptive SR noise borrows the reward pathway's candidates,
                # matching how the harness builds learners.
                sr_noise = (
                    config.r_candidates
                    if config.sr_adaptive_noise
                    else config.sr_measurement_noise
                )
                learner = MakSrLearner(
                    sr_measurement_noise=sr_noise,
                    sr_adaptive_noise=config.sr_adaptive_noise,
                    **common,
                )
                learner.theta = theta
                learner.reward_filter.weights = _require(archive, f"agent{i}_weights")
                m = _require(archive, f"agent{i}_m")
                learner.sr_filter.m[:] = m
                if f"agent{i}_sr_w" in archive:
                    learner.sr_filter.w = archive[f"agent{i}_sr_w"]
                    learner.reward_filter.p = archive[f"agent{i}_p_theta"]
            learners.append(learner)
    return meta, learners


def inspect_checkpoint(path: str | Path) -> dict:
    """Dimensions and provenance without reconstructing learners."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        version = int(_require(archive, "format_version"))
        meta = json.loads(str(_require(archive, "meta")))
        agents = []
        for i in range(meta["n_agents"]):
            theta = archive[f"agent{i}_theta"]
            means = archive[f"agent{i}_bank_means"]
            agents.append(
                {
                    "index": i,
                    "theta_dim": int(theta.shape[0]),
                    "n_rbf": int(means.shape[0]),
                    "obs_dim": int(means.shape[1]),
                    "has_sr": f"agent{i}_m" in archive,
                }
            )
    return {
        "format_version": version,
        "learner": meta["learner"],
        "scenario": meta["scenario"],
        "n_agents": meta["n_agents"],
        "run_index": meta.get("run_index", 0),
        "agents": agents,
        "config": meta["config"],
    }
