"""2D multi-agent particle world with discrete actions and local observations.

Damped point-mass dynamics on a square arena centered at the origin.  Each
agent picks one of five actions (stay, left, right, up, down) that applies a
unit force scaled by its acceleration.  Leaving the arena costs -50 and ends
the episode; a predator touching a prey earns +100 (prey -100) and ends the
episode; every step adds a small distance-based shaping term.  Episodes are
bounded by a step cap.

All randomness is confined to the seeded initial placement, so a fixed seed
and action sequence reproduce a trajectory bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SCENARIO_NAMES = (
    "simple_cooperation",
    "simple_competition",
    "predator_prey_1v2",
    "predator_prey_2v1",
)

N_ACTIONS = 5
#: Force directions for actions 0..4: stay, left, right, up, down.
ACTION_FORCES = np.array(
    [[0.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
)

DT = 0.01
DAMPING = 0.25
ARENA_HALF_WIDTH = 1.0
STEP_CAP = 100
SHAPING_COEF = 0.1
LANDMARK_RADIUS = 0.05

OUT_OF_BOUNDS_PENALTY = -50.0
INTERCEPTION_REWARD = 100.0


@dataclass(frozen=True)
class AgentSpec:
    """Physical parameters and observation size of one agent."""

    role: str  # predator | prey | cooperator | competitor
    max_speed: float
    accel: float
    radius: float
    obs_dim: int


@dataclass
class Event:
    """A discrete outcome within a step; participants are agent indices."""

    kind: str  # out_of_bounds | interception | landmark_reach
    agents: tuple[int, ...]


@dataclass
class WorldState:
    positions: np.ndarray  # (n_agents, 2)
    velocities: np.ndarray  # (n_agents, 2)
    landmarks: np.ndarray  # (n_landmarks, 2)
    step_count: int = 0
    bounds: float = ARENA_HALF_WIDTH
    dt: float = DT


@dataclass
class StepOutcome:
    observations: list[np.ndarray]
    rewards: np.ndarray
    done: bool
    events: list[Event] = field(default_factory=list)


_ROLE_PARAMS = {
    # role: (max_speed, accel, radius)
    "predator": (1.0, 3.0, 0.075),
    "prey": (1.3, 4.0, 0.05),
    "cooperator": (1.0, 3.0, 0.05),
    "competitor": (1.0, 3.0, 0.05),
}

_SCENARIO_ROLES = {
    "simple_cooperation": (["cooperator", "cooperator"], 1),
    "simple_competition": (["competitor", "competitor"], 1),
    "predator_prey_1v2": (["predator", "prey", "prey"], 0),
    "predator_prey_2v1": (["predator", "predator", "prey"], 0),
}


class ParticleWorld:
    """One scenario instance: agent specs plus mutable world state."""

    def __init__(
        self,
        scenario: str,
        seed: int | None = None,
        step_cap: int = STEP_CAP,
        shaping_coef: float = SHAPING_COEF,
    ) -> None:
        if scenario not in _SCENARIO_ROLES:
            raise ValueError(
                f"unknown scenario {scenario!r}; choose from {SCENARIO_NAMES}"
            )
        self.scenario = scenario
        self.step_cap = step_cap
        self.shaping_coef = shaping_coef
        roles, n_landmarks = _SCENARIO_ROLES[scenario]
        self.n_agents = len(roles)
        self.n_landmarks = n_landmarks
        self._predators = [i for i, r in enumerate(roles) if r == "predator"]
        self._prey = [i for i, r in enumerate(roles) if r == "prey"]
        self.specs = [self._build_spec(roles, i) for i in range(self.n_agents)]
        self._accels = np.array([s.accel for s in self.specs])
        self._max_speeds = np.array([s.max_speed for s in self.specs])
        self.state = WorldState(
            positions=np.zeros((self.n_agents, 2)),
            velocities=np.zeros((self.n_agents, 2)),
            landmarks=np.zeros((n_landmarks, 2)),
        )
        self.reset(seed)

    def _build_spec(self, roles: list[str], index: int) -> AgentSpec:
        role = roles[index]
        max_speed, accel, radius = _ROLE_PARAMS[role]
        # Observation layout: own velocity (2) + own position (2)
        # + relative landmarks (2 each) + relative other agents (2 each)
        # + velocities of other prey (2 each, predator-prey scenarios only).
        n_prey_vel = 0
        if self._prey:
            n_prey_vel = len([j for j in self._prey if j != index])
        obs_dim = (
            2
            + 2
            + 2 * self.n_landmarks
            + 2 * (len(roles) - 1)
            + 2 * n_prey_vel
        )
        return AgentSpec(
            role=role, max_speed=max_speed, accel=accel, radius=radius, obs_dim=obs_dim
        )

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    # ------------------------------------------------------------------
    # Lifecycle
    # ------------------------------------------------------------------

    def reset(self, seed: int | None = None) -> list[np.ndarray]:
        """Place agents and landmarks uniformly in the arena; zero velocities."""
        rng = np.random.default_rng(seed)
        b = self.state.bounds
        self.state.positions = rng.uniform(-b, b, size=(self.n_agents, 2))
        self.state.velocities = np.zeros((self.n_agents, 2))
        self.state.landmarks = rng.uniform(-b, b, size=(self.n_landmarks, 2))
        self.state.step_count = 0
        return self.observe_all()

    # ------------------------------------------------------------------
    # Dynamics
    # ------------------------------------------------------------------

    def step(self, joint_action) -> StepOutcome:
        """Advance one tick: integrate motion, then score events and shaping."""
        actions = np.asarray(joint_action, dtype=int)
        if actions.shape != (self.n_agents,):
            raise ValueError(f"expected {self.n_agents} actions, got {actions.shape}")
        if np.any(actions < 0) or np.any(actions >= N_ACTIONS):
            raise ValueError("action index out of range")

        st = self.state
        vel = (1.0 - DAMPING) * st.velocities + ACTION_FORCES[actions] * (
            self._accels[:, None] * st.dt
        )
        speeds = np.sqrt((vel * vel).sum(axis=1))
        over = speeds > self._max_speeds
        if np.any(over):
            vel[over] *= (self._max_speeds[over] / speeds[over])[:, None]
        st.velocities = vel
        st.positions = st.positions + vel * st.dt
        st.step_count += 1

        rewards = self.shaping_rewards()
        events: list[Event] = []
        done = False

        oob = np.any(np.abs(st.positions) > st.bounds, axis=1)
        for i in np.flatnonzero(oob):
            rewards[i] += OUT_OF_BOUNDS_PENALTY
            events.append(Event("out_of_bounds", (int(i),)))
            done = True

        for p in self._predators:
            for q in self._prey:
                touch = self.specs[p].radius + self.specs[q].radius
                diff = st.positions[p] - st.positions[q]
                if float(diff @ diff) < touch * touch:
                    rewards[p] += INTERCEPTION_REWARD
                    rewards[q] -= INTERCEPTION_REWARD
                    events.append(Event("interception", (p, q)))
                    done = True

        if self.n_landmarks:
            for i, spec in enumerate(self.specs):
                reach = spec.radius + LANDMARK_RADIUS
                for lm in st.landmarks:
                    diff = st.positions[i] - lm
                    if float(diff @ diff) < reach * reach:
                        events.append(Event("landmark_reach", (i,)))

        if st.step_count >= self.step_cap:
            done = True

        return StepOutcome(
            observations=self.observe_all(), rewards=rewards, done=done, events=events
        )

    # ------------------------------------------------------------------
    # Observations and rewards
    # ------------------------------------------------------------------

    def observe(self, agent_index: int) -> np.ndarray:
        """Local measurement vector; composition documented in _build_spec."""
        st = self.state
        pos = st.positions[agent_index]
        out = np.empty(self.specs[agent_index].obs_dim)
        out[0:2] = st.velocities[agent_index]
        out[2:4] = pos
        k = 4
        for lm in st.landmarks:
            out[k : k + 2] = lm - pos
            k += 2
        for j in range(self.n_agents):
            if j != agent_index:
                out[k : k + 2] = st.positions[j] - pos
                k += 2
        if self._prey:
            for j in self._prey:
                if j != agent_index:
                    out[k : k + 2] = st.velocities[j]
                    k += 2
        return out

    def observe_all(self) -> list[np.ndarray]:
        return [self.observe(i) for i in range(self.n_agents)]

    def observation_bounds(self, agent_index: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-component box the observation vector lives in (for feature
        center initialization)."""
        st = self.state
        spec = self.specs[agent_index]
        lo: list[float] = []
        lo += [-spec.max_speed] * 2
        lo += [-st.bounds] * 2
        lo += [-2.0 * st.bounds] * (2 * self.n_landmarks)
        lo += [-2.0 * st.bounds] * (2 * (self.n_agents - 1))
        if self._prey:
            others = [j for j in self._prey if j != agent_index]
            for j in others:
                lo += [-self.specs[j].max_speed] * 2
        low = np.array(lo)
        return low, -low

    def shaping_rewards(self) -> np.ndarray:
        """Per-step distance shaping for the current positions."""
        st = self.state
        c = self.shaping_coef
        rewards = np.zeros(self.n_agents)
        if self._predators and self._prey:
            diff = (
                st.positions[self._predators][:, None, :]
                - st.positions[self._prey][None, :, :]
            )
            dists = np.sqrt((diff * diff).sum(axis=2))  # (n_pred, n_prey)
            rewards[self._predators] = -c * dists.min(axis=1)
            rewards[self._prey] = c * dists.min(axis=0)
        elif self.scenario == "simple_cooperation":
            # Shared goal, identical reward copies: use the mean distance so
            # the common signal reflects both agents' progress.
            lm = st.landmarks[0]
            dists = [
                float(np.hypot(*(st.positions[i] - lm))) for i in range(self.n_agents)
            ]
            rewards[:] = -c * float(np.mean(dists))
        elif self.scenario == "simple_competition":
            lm = st.landmarks[0]
            d = [
                float(np.hypot(*(st.positions[i] - lm))) for i in range(self.n_agents)
            ]
            rewards[0] = c * (d[1] - d[0])
            rewards[1] = c * (d[0] - d[1])
        return rewards


def make_scenario(
    name: str,
    seed: int | None = None,
    step_cap: int = STEP_CAP,
    shaping_coef: float = SHAPING_COEF,
) -> ParticleWorld:
    """Build and seed one of the four scenario presets."""
    return ParticleWorld(
        name, seed=seed, step_cap=step_cap, shaping_coef=shaping_coef
    )
