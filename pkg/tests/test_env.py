"""Unit tests for the particle-world scenarios."""

from __future__ import annotations

import numpy as np
import pytest

from makrl.env import (
    ACTION_FORCES,
    ARENA_HALF_WIDTH,
    DAMPING,
    DT,
    INTERCEPTION_REWARD,
    N_ACTIONS,
    OUT_OF_BOUNDS_PENALTY,
    SCENARIO_NAMES,
    ParticleWorld,
    make_scenario,
)


# ----------------------------------------------------------------------
# Rosters and observation sizes
# ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "scenario, roles, obs_dims, n_landmarks",
    [
        ("simple_cooperation", ["cooperator", "cooperator"], [8, 8], 1),
        ("simple_competition", ["competitor", "competitor"], [8, 8], 1),
        ("predator_prey_1v2", ["predator", "prey", "prey"], [12, 10, 10], 0),
        ("predator_prey_2v1", ["predator", "predator", "prey"], [10, 10, 8], 0),
    ],
)
def test_scenario_rosters(scenario, roles, obs_dims, n_landmarks):
    world = make_scenario(scenario, seed=0)
    assert [s.role for s in world.specs] == roles
    assert [s.obs_dim for s in world.specs] == obs_dims
    assert world.n_landmarks == n_landmarks
    assert world.n_actions == N_ACTIONS
    obs = world.observe_all()
    assert [len(o) for o in obs] == obs_dims


def test_unknown_scenario_rejected():
    with pytest.raises(ValueError, match="unknown scenario"):
        ParticleWorld("tag_team")
    assert len(SCENARIO_NAMES) == 4


def test_reset_places_everything_inside_the_arena():
    world = make_scenario("simple_cooperation", seed=123)
    assert np.all(np.abs(world.state.positions) <= ARENA_HALF_WIDTH)
    assert np.all(np.abs(world.state.landmarks) <= ARENA_HALF_WIDTH)
    assert np.all(world.state.velocities == 0.0)
    assert world.state.step_count == 0


# ----------------------------------------------------------------------
# Dynamics
# ----------------------------------------------------------------------


def test_one_step_damped_point_mass_integration():
    world = make_scenario("predator_prey_1v2", seed=0)
    st = world.state
    st.positions = np.array([[0.0, 0.0], [0.5, 0.5], [-0.5, -0.5]])
    st.velocities = np.array([[0.1, 0.2], [0.0, 0.0], [0.0, 0.0]])
    outcome = world.step([2, 0, 0])  # predator pushes right, prey stay
    accel = world.specs[0].accel
    expected_v = (1.0 - DAMPING) * np.array([0.1, 0.2]) + ACTION_FORCES[2] * (
        accel * DT
    )
    np.testing.assert_allclose(st.velocities[0], expected_v, rtol=1e-15)
    np.testing.assert_allclose(
        st.positions[0], expected_v * DT, rtol=1e-15
    )
    # The resting prey that chose "stay" must not move at all.
    np.testing.assert_array_equal(st.positions[1], [0.5, 0.5])
    assert not outcome.done and outcome.events == []


def test_speed_is_clipped_to_max_preserving_direction():
    world = make_scenario("predator_prey_1v2", seed=0)
    st = world.state
    st.positions = np.array([[0.0, 0.0], [0.5, 0.5], [-0.5, -0.5]])
    st.velocities = np.array([[6.0, 8.0], [0.0, 0.0], [0.0, 0.0]])
    world.step([0, 0, 0])
    v = st.velocities[0]
    assert np.hypot(*v) == pytest.approx(world.specs[0].max_speed, rel=1e-12)
    assert v[0] / v[1] == pytest.approx(6.0 / 8.0, rel=1e-12)


def test_action_validation():
    world = make_scenario("predator_prey_1v2", seed=0)
    with pytest.raises(ValueError, match="expected 3 actions"):
        world.step([0, 0])
    with pytest.raises(ValueError, match="out of range"):
        world.step([0, 0, 5])
    with pytest.raises(ValueError, match="out of range"):
        world.step([-1, 0, 0])


# ----------------------------------------------------------------------
# Events and terminal rewards
# ----------------------------------------------------------------------


def test_out_of_bounds_penalizes_and_ends_episode():
    world = make_scenario("predator_prey_1v2", seed=0)
    st = world.state
    st.positions = np.array([[0.0, 0.0], [0.9999, 0.0], [-0.5, -0.5]])
    st.velocities = np.array([[0.0, 0.0], [1.3, 0.0], [0.0, 0.0]])
    outcome = world.step([0, 0, 0])
    assert outcome.done
    assert [e.kind for e in outcome.events] == ["out_of_bounds"]
    assert outcome.events[0].agents == (1,)
    shaped = world.shaping_rewards()
    assert outcome.rewards[1] == pytest.approx(shaped[1] + OUT_OF_BOUNDS_PENALTY)
    assert outcome.rewards[0] == pytest.approx(shaped[0])


def test_interception_pays_predator_and_charges_prey():
    world = make_scenario("predator_prey_1v2", seed=0)
    st = world.state
    st.positions = np.array([[0.0, 0.0], [0.1, 0.0], [0.5, 0.5]])
    st.velocities = np.zeros((3, 2))
    touch = world.specs[0].radius + world.specs[1].radius
    assert 0.1 < touch  # placement is inside the touch radius
    outcome = world.step([0, 0, 0])
    assert outcome.done
    assert [e.kind for e in outcome.events] == ["interception"]
    assert outcome.events[0].agents == (0, 1)
    shaped = world.shaping_rewards()
    assert outcome.rewards[0] == pytest.approx(shaped[0] + INTERCEPTION_REWARD)
    assert outcome.rewards[1] == pytest.approx(shaped[1] - INTERCEPTION_REWARD)
    assert outcome.rewards[2] == pytest.approx(shaped[2])


def test_landmark_reach_is_reported_but_not_terminal():
    world = make_scenario("simple_cooperation", seed=0)
    st = world.state
    st.landmarks = np.array([[0.0, 0.0]])
    st.positions = np.array([[0.0, 0.0], [0.5, 0.5]])
    st.velocities = np.zeros((2, 2))
    outcome = world.step([0, 0])
    assert [e.kind for e in outcome.events] == ["landmark_reach"]
    assert outcome.events[0].agents == (0,)
    assert not outcome.done


def test_step_cap_truncates_episode():
    world = make_scenario("predator_prey_1v2", seed=0, step_cap=3)
    st = world.state
    st.positions = np.array([[0.0, 0.0], [0.5, 0.5], [-0.5, -0.5]])
    st.velocities = np.zeros((3, 2))
    for k in range(3):
        outcome = world.step([0, 0, 0])
        assert outcome.done == (k == 2)
    assert outcome.events == []


# ----------------------------------------------------------------------
# Shaping rewards
# ----------------------------------------------------------------------


def test_predator_prey_shaping_hand_values():
    world = make_scenario("predator_prey_1v2", seed=0, shaping_coef=0.1)
    world.state.positions = np.array([[0.0, 0.0], [0.3, 0.4], [0.6, 0.8]])
    shaped = world.shaping_rewards()
    # Predator-prey distances are 0.5 and 1.0.
    assert shaped[0] == pytest.approx(-0.1 * 0.5)
    assert shaped[1] == pytest.approx(+0.1 * 0.5)
    assert shaped[2] == pytest.approx(+0.1 * 1.0)


def test_two_predators_share_the_nearest_prey_distance():
    world = make_scenario("predator_prey_2v1", seed=0, shaping_coef=0.1)
    world.state.positions = np.array([[0.0, 0.0], [0.3, 0.4], [0.6, 0.8]])
    shaped = world.shaping_rewards()
    # Prey is agent 2; distances to it are 1.0 (pred 0) and 0.5 (pred 1).
    assert shaped[0] == pytest.approx(-0.1 * 1.0)
    assert shaped[1] == pytest.approx(-0.1 * 0.5)
    assert shaped[2] == pytest.approx(+0.1 * 0.5)  # nearest predator


def test_cooperation_shaping_is_shared_mean_distance():
    world = make_scenario("simple_cooperation", seed=0, shaping_coef=0.1)
    world.state.landmarks = np.array([[0.0, 0.0]])
    world.state.positions = np.array([[0.3, 0.4], [0.6, 0.8]])
    shaped = world.shaping_rewards()
    assert shaped[0] == pytest.approx(-0.1 * 0.75)
    assert shaped[1] == shaped[0]


def test_competition_shaping_is_zero_sum():
    world = make_scenario("simple_competition", seed=0, shaping_coef=0.1)
    world.state.landmarks = np.array([[0.0, 0.0]])
    world.state.positions = np.array([[0.3, 0.4], [0.6, 0.8]])
    shaped = world.shaping_rewards()
    assert shaped[0] == pytest.approx(0.1 * (1.0 - 0.5))
    assert shaped[1] == pytest.approx(-shaped[0])
    assert shaped.sum() == pytest.approx(0.0, abs=1e-15)


# ----------------------------------------------------------------------
# Observations
# ----------------------------------------------------------------------


def test_observation_layout_predator():
    world = make_scenario("predator_prey_1v2", seed=0)
    st = world.state
    st.positions = np.array([[0.1, 0.2], [0.4, 0.4], [-0.3, 0.5]])
    st.velocities = np.array([[0.01, 0.02], [0.03, 0.04], [0.05, 0.06]])
    obs = world.observe(0)
    np.testing.assert_array_equal(obs[0:2], [0.01, 0.02])
    np.testing.assert_array_equal(obs[2:4], [0.1, 0.2])
    np.testing.assert_allclose(obs[4:6], [0.3, 0.2])  # prey 1 relative
    np.testing.assert_allclose(obs[6:8], [-0.4, 0.3])  # prey 2 relative
    np.testing.assert_array_equal(obs[8:10], [0.03, 0.04])  # prey 1 velocity
    np.testing.assert_array_equal(obs[10:12], [0.05, 0.06])  # prey 2 velocity


def test_observation_layout_with_landmark():
    world = make_scenario("simple_cooperation", seed=0)
    st = world.state
    st.landmarks = np.array([[0.5, -0.5]])
    st.positions = np.array([[0.1, 0.2], [0.4, 0.4]])
    st.velocities = np.array([[0.01, 0.02], [0.03, 0.04]])
    obs = world.observe(1)
    np.testing.assert_array_equal(obs[0:2], [0.03, 0.04])
    np.testing.assert_array_equal(obs[2:4], [0.4, 0.4])
    np.testing.assert_allclose(obs[4:6], [0.1, -0.9])  # landmark relative
    np.testing.assert_allclose(obs[6:8], [-0.3, -0.2])  # partner relative


def test_observation_bounds_cover_observations():
    for scenario in SCENARIO_NAMES:
        world = make_scenario(scenario, seed=7)
        for i in range(world.n_agents):
            low, high = world.observation_bounds(i)
            assert low.shape == (world.specs[i].obs_dim,)
            np.testing.assert_array_equal(high, -low)
            obs = world.observe(i)
            assert np.all(obs >= low - 1e-12) and np.all(obs <= high + 1e-12)


def test_prey_velocity_bound_uses_prey_speed():
    world = make_scenario("predator_prey_1v2", seed=0)
    low, _ = world.observation_bounds(0)
    assert low[0] == -world.specs[0].max_speed  # own velocity bound
    assert low[8] == -world.specs[1].max_speed  # observed prey velocity bound


# ----------------------------------------------------------------------
# Determinism
# ----------------------------------------------------------------------


def test_identical_seeds_reproduce_trajectories_bitwise():
    a = make_scenario("predator_prey_1v2", seed=99)
    b = make_scenario("predator_prey_1v2", seed=99)
    rng = np.random.default_rng(1)
    actions = rng.integers(0, N_ACTIONS, size=(50, 3))
    for row in actions:
        out_a = a.step(row)
        out_b = b.step(row)
        for oa, ob in zip(out_a.observations, out_b.observations):
            assert np.array_equal(oa, ob)
        assert np.array_equal(out_a.rewards, out_b.rewards)
        if out_a.done:
            a.reset(7)
            b.reset(7)


def test_different_seeds_give_different_placements():
    a = make_scenario("predator_prey_1v2", seed=1)
    b = make_scenario("predator_prey_1v2", seed=2)
    assert not np.array_equal(a.state.positions, b.state.positions)
