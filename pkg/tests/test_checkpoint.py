"""Unit tests for checkpoint save/load round trips."""

from __future__ import annotations

import numpy as np
import pytest

from makrl.checkpoint import (
    FORMAT_VERSION,
    inspect_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from makrl.env import make_scenario
from makrl.harness import RunConfig, run_training


def trained_learners(learner_kind, **config_kwargs):
    config = RunConfig(
        learner=learner_kind,
        episodes_train=3,
        episodes_test=1,
        rbf_count=3,
        step_cap=8,
        **config_kwargs,
    )
    _, learners = run_training(config, run_index=0)
    return config, learners


def greedy_rollout(config, learners, seed=1234, steps=25):
    """Greedy joint actions on a fixed world; the checkpoint fidelity probe."""
    world = make_scenario(config.scenario, seed=seed, step_cap=config.step_cap)
    obs = world.observe_all()
    taken = []
    for _ in range(steps):
        actions = [l.greedy_action(o) for l, o in zip(learners, obs)]
        taken.append(actions)
        outcome = world.step(actions)
        obs = outcome.observations
        if outcome.done:
            obs = world.reset(seed + 1)
    return taken


def test_td_round_trip_restores_all_filter_state(tmp_path):
    config, learners = trained_learners("mak_td")
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners, run_index=0)
    meta, loaded = load_checkpoint(path)
    assert meta["learner"] == "mak_td"
    assert meta["n_agents"] == len(learners)
    for orig, back in zip(learners, loaded):
        assert np.array_equal(orig.theta, back.theta)
        assert np.array_equal(orig.p_theta, back.p_theta)
        assert np.array_equal(orig.last_weights, back.last_weights)
        assert np.array_equal(orig.bank.means, back.bank.means)
        assert np.array_equal(orig.bank.covariances, back.bank.covariances)
        assert back.bank.rate_mean == orig.bank.rate_mean
        assert back.n_actions == orig.n_actions
        assert back.gamma == orig.gamma


def test_sr_round_trip_default_omits_covariances(tmp_path):
    config, learners = trained_learners("mak_sr")
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners, run_index=0)
    meta, loaded = load_checkpoint(path)
    assert meta["learner"] == "mak_sr"
    assert meta["include_covariances"] is False
    for orig, back in zip(learners, loaded):
        assert np.array_equal(orig.theta, back.theta)
        assert np.array_equal(orig.m, back.m)
        assert np.array_equal(orig.m_matrix, back.m_matrix)
        # Covariances were not stored: the load starts from fresh priors.
        assert not np.array_equal(orig.sr_filter.w, back.sr_filter.w)
        np.testing.assert_array_equal(
            back.sr_filter.w, np.eye(back.dim) * config.prior_cov
        )


def test_sr_round_trip_with_covariances(tmp_path):
    config, learners = trained_learners("mak_sr")
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners, run_index=0, include_covariances=True)
    meta, loaded = load_checkpoint(path)
    assert meta["include_covariances"] is True
    for orig, back in zip(learners, loaded):
        assert np.array_equal(orig.sr_filter.w, back.sr_filter.w)
        assert np.array_equal(orig.p_theta, back.p_theta)


def test_sr_adaptive_noise_round_trip(tmp_path):
    config, learners = trained_learners("mak_sr", sr_adaptive_noise=True)
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners, run_index=0)
    _, loaded = load_checkpoint(path)
    for orig, back in zip(learners, loaded):
        assert back.sr_filter.adaptive
        np.testing.assert_array_equal(
            back.sr_filter.r_candidates, orig.sr_filter.r_candidates
        )


@pytest.mark.parametrize("kind", ["mak_td", "mak_sr"])
def test_loaded_learners_reproduce_greedy_behavior(tmp_path, kind):
    config, learners = trained_learners(kind)
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners, run_index=0)
    _, loaded = load_checkpoint(path)
    assert greedy_rollout(config, learners) == greedy_rollout(config, loaded)


def test_loaded_learners_can_keep_training(tmp_path):
    # A restored learner must be a fully working object, not a husk: its
    # kernels need contiguous buffers, so this exercises the load path.
    from makrl.maktd import Transition

    config, learners = trained_learners("mak_td")
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners, run_index=0)
    _, loaded = load_checkpoint(path)
    learner = loaded[0]
    obs_dim = learner.bank.obs_dim
    rng = np.random.default_rng(0)
    for _ in range(10):
        obs = rng.uniform(-0.5, 0.5, size=obs_dim)
        nxt = rng.uniform(-0.5, 0.5, size=obs_dim)
        diag = learner.train_step(
            Transition(obs, int(rng.integers(learner.n_actions)), 0.5, nxt, False)
        )
        assert np.isfinite(diag.loss)


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "nope.npz")
    with pytest.raises(FileNotFoundError):
        inspect_checkpoint(tmp_path / "nope.npz")


def test_wrong_version_rejected(tmp_path):
    config, learners = trained_learners("mak_td")
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners)
    with np.load(path, allow_pickle=False) as archive:
        arrays = {k: archive[k] for k in archive.files}
    arrays["format_version"] = np.array(FORMAT_VERSION + 1)
    np.savez(path, **arrays)
    with pytest.raises(ValueError, match="unsupported checkpoint version"):
        load_checkpoint(path)


def test_missing_field_reported_by_name(tmp_path):
    config, learners = trained_learners("mak_td")
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners)
    with np.load(path, allow_pickle=False) as archive:
        arrays = {k: archive[k] for k in archive.files}
    del arrays["agent0_theta"]
    np.savez(path, **arrays)
    with pytest.raises(ValueError, match="agent0_theta"):
        load_checkpoint(path)


def test_inspect_reports_dimensions(tmp_path):
    config, learners = trained_learners("mak_sr")
    path = tmp_path / "ck.npz"
    save_checkpoint(path, config, learners, run_index=3)
    info = inspect_checkpoint(path)
    assert info["format_version"] == FORMAT_VERSION
    assert info["learner"] == "mak_sr"
    assert info["scenario"] == config.scenario
    assert info["n_agents"] == 3
    assert info["run_index"] == 3
    assert [a["obs_dim"] for a in info["agents"]] == [12, 10, 10]
    assert all(a["has_sr"] for a in info["agents"])
    assert all(a["n_rbf"] == 3 for a in info["agents"])
    assert info["config"]["learner"] == "mak_sr"
