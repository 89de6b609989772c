"""Multi-agent adaptive Kalman temporal-difference learner.

Value weights theta are estimated by a Kalman filter that treats each reward
as a scalar linear observation r = h . theta + v, where h couples the feature
vectors of the current and (greedy) next state-action pair.  The unknown
observation-noise variance is handled by a bank of candidate filters whose
posterior weights are updated recursively from the Gaussian innovation
likelihood; the bank is fused into a single mean and covariance each step.

Action selection during learning maximizes the information the next reward
carries about theta (squared norm of the would-be observation map); testing
uses the plain greedy policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import akf_update_kernel
from .features import RbfBank, loss as squared_loss

#: Candidate measurement-noise variances for the multiple-model bank.
DEFAULT_R_CANDIDATES = (0.01, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0)

DEFAULT_GAMMA = 0.95
DEFAULT_PROCESS_NOISE = 1e-7
DEFAULT_PRIOR_COV = 10.0


@dataclass
class Transition:
    """One environment step as seen by a single agent."""

    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    terminal: bool

    def __post_init__(self) -> None:
        self.obs = np.asarray(self.obs, dtype=float)
        self.next_obs = np.asarray(self.next_obs, dtype=float)
        if self.obs.shape != self.next_obs.shape:
            raise ValueError("obs and next_obs must have equal dimensions")
        if not np.isfinite(self.reward):
            raise ValueError("reward must be finite")


@dataclass
class StepDiagnostics:
    """Per-step training metrics: pre-update loss, innovation, model weights."""

    loss: float
    innovation: float
    weights: np.ndarray


class AdaptiveKalmanFilter:
    """Kalman filter over a weight vector with multiple-model noise adaptation.

    Maintains mean ``theta`` and covariance ``p`` of the weights, a linear
    process model (F, Q), and a bank of scalar measurement-noise candidates
    R^j with recursive posterior weights.  Scalar measurements enter through
    ``update(h, y)`` with y = h . theta + v.
    """

    def __init__(
        self,
        dim: int,
        r_candidates=DEFAULT_R_CANDIDATES,
        process_noise: float | np.ndarray = DEFAULT_PROCESS_NOISE,
        prior_cov: float | np.ndarray = DEFAULT_PRIOR_COV,
        transition: np.ndarray | None = None,
        likelihood: str = "full",
    ) -> None:
        if likelihood not in ("full", "exponential_only"):
            raise ValueError(f"unknown likelihood mode {likelihood!r}")
        self.dim = dim
        self.r_candidates = np.asarray(r_candidates, dtype=float)
        if self.r_candidates.ndim != 1 or np.any(self.r_candidates <= 0.0):
            raise ValueError("r_candidates must be a list of positive scalars")
        self.likelihood = likelihood
        self.theta = np.zeros(dim)
        self.p = (
            np.eye(dim) * prior_cov
            if np.isscalar(prior_cov)
            else np.array(prior_cov, dtype=float)
        )
        self.q = (
            np.eye(dim) * process_noise
            if np.isscalar(process_noise)
            else np.array(process_noise, dtype=float)
        )
        # None marks the identity process model so predict can skip the
        # O(dim^3) matrix products that dominate the step cost.
        if transition is None or (
            transition.shape == (dim, dim) and np.array_equal(transition, np.eye(dim))
        ):
            self.f = None
        else:
            self.f = np.asarray(transition, dtype=float)
        self.weights = np.full(len(self.r_candidates), 1.0 / len(self.r_candidates))

    @property
    def f_matrix(self) -> np.ndarray:
        return np.eye(self.dim) if self.f is None else self.f

    def predict(self) -> None:
        """Propagate mean and covariance one step: theta <- F theta,
        P <- F P F^T + Q."""
        if self.f is not None:
            self.theta = self.f @ self.theta
            fpf = self.f @ self.p @ self.f.T
            # The triple product is not exactly symmetric in floats.
            self.p = 0.5 * (fpf + fpf.T)
        self.p += self.q

    def update(self, h: np.ndarray, y: float) -> float:
        """Fused multiple-model measurement update; returns the innovation.

        Each candidate R^j shares the gain direction c = P h, so its
        Joseph-form posterior covariance (I - K h^T) P (I - K h^T)^T
        + R^j K K^T collapses exactly to P - c c^T / S_j with
        S_j = h^T c + R^j.  The weighted fusion of the candidate means and
        covariances (including the spread of the candidate means around the
        fused mean, nu^2 Var_w(1/S) c c^T) is therefore a single rank-one
        correction.  The kernel applies it in place and refreshes the model
        weights from the Gaussian innovation likelihoods in log space.
        """
        ok, nu = akf_update_kernel(
            self.p,
            self.theta,
            self.weights,
            np.ascontiguousarray(h, dtype=float),
            float(y),
            self.r_candidates,
            self.likelihood == "full",
        )
        if not ok:
            raise FloatingPointError(
                "innovation covariance not positive; filter state corrupted"
            )
        return float(nu)


class MakTdLearner:
    """Per-agent value learner: adaptive Kalman filter over Q-weights plus an
    adaptive RBF encoder and information-seeking exploration."""

    def __init__(
        self,
        bank: RbfBank,
        n_actions: int,
        rng: np.random.Generator,
        gamma: float = DEFAULT_GAMMA,
        r_candidates=DEFAULT_R_CANDIDATES,
        process_noise: float | np.ndarray = DEFAULT_PROCESS_NOISE,
        prior_cov: float | np.ndarray = DEFAULT_PRIOR_COV,
        transition: np.ndarray | None = None,
        likelihood: str = "full",
        greedy_mix: float = 0.0,
    ) -> None:
        if not 0.0 <= gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= greedy_mix <= 1.0:
            raise ValueError("greedy_mix must lie in [0, 1]")
        self.bank = bank
        self.n_actions = n_actions
        self.rng = rng
        self.gamma = gamma
        self.greedy_mix = greedy_mix
        self.filter = AdaptiveKalmanFilter(
            dim=bank.n_features(n_actions),
            r_candidates=r_candidates,
            process_noise=process_noise,
            prior_cov=prior_cov,
            transition=transition,
            likelihood=likelihood,
        )

    # Filter state, exposed under the conventional names.
    @property
    def theta(self) -> np.ndarray:
        return self.filter.theta

    @theta.setter
    def theta(self, value: np.ndarray) -> None:
        self.filter.theta = np.ascontiguousarray(value, dtype=float)

    @property
    def p_theta(self) -> np.ndarray:
        return self.filter.p

    @p_theta.setter
    def p_theta(self, value: np.ndarray) -> None:
        self.filter.p = np.ascontiguousarray(value, dtype=float)

    @property
    def last_weights(self) -> np.ndarray:
        return self.filter.weights

    @property
    def r_candidates(self) -> np.ndarray:
        return self.filter.r_candidates

    @property
    def dim(self) -> int:
        return self.filter.dim

    # ------------------------------------------------------------------
    # Measurement construction
    # ------------------------------------------------------------------

    def _q_values(self, phi_s: np.ndarray) -> np.ndarray:
        return self.theta.reshape(self.n_actions, self.bank.block_size) @ phi_s

    def _greedy_from_phi(self, phi_s: np.ndarray) -> int:
        q = self._q_values(phi_s)
        best = np.flatnonzero(q == q.max())
        if best.size == 1:
            return int(best[0])
        return int(best[self.rng.integers(best.size)])

    def measurement_map(
        self, obs: np.ndarray, action: int, next_obs: np.ndarray, terminal: bool = False
    ) -> np.ndarray:
        """Observation map h with r = h . theta + v.

        Non-terminal: h = phi(s, a) - gamma * phi(s', a*) with a* greedy in s'
        under the current theta.  Terminal: h = phi(s, a).
        """
        nb = self.bank.block_size
        h = np.zeros(self.dim)
        phi_s = self.bank.state_features(obs)
        h[action * nb : (action + 1) * nb] = phi_s
        if not terminal:
            phi_next = self.bank.state_features(next_obs)
            a_star = self._greedy_from_phi(phi_next)
            h[a_star * nb : (a_star + 1) * nb] -= self.gamma * phi_next
        return h

    # ------------------------------------------------------------------
    # Filter steps
    # ------------------------------------------------------------------

    def predict(self) -> None:
        self.filter.predict()

    def mmae_update(self, h: np.ndarray, reward: float) -> float:
        return self.filter.update(h, reward)

    # ------------------------------------------------------------------
    # Policies
    # ------------------------------------------------------------------

    def greedy_action(self, obs: np.ndarray) -> int:
        """argmax_a phi(s, a) . theta, exact ties broken uniformly."""
        return self._greedy_from_phi(self.bank.state_features(obs))

    def select_action_explore(self, obs: np.ndarray) -> int:
        """Pick the action whose reward observation would be most informative.

        Scores each action by || phi(s, a) - gamma * phi(s, a_greedy) ||^2.
        Block-disjoint features make every non-greedy action score
        (1 + gamma^2) * ||phi_s||^2 and the greedy action (1 - gamma)^2 *
        ||phi_s||^2.  With gamma in (0, 1) and the bias forcing
        ||phi_s||^2 >= 1, the non-greedy actions always tie strictly above
        the greedy one, so the argmax-with-uniform-tie-break reduces to a
        uniform draw over the non-greedy actions.  At gamma = 0 all actions
        tie, so the draw is uniform over all of them.
        """
        phi_s = self.bank.state_features(obs)
        if self.greedy_mix > 0.0 and self.rng.random() < self.greedy_mix:
            return self._greedy_from_phi(phi_s)
        if self.gamma == 0.0 or self.n_actions == 1:
            return int(self.rng.integers(self.n_actions))
        a_greedy = self._greedy_from_phi(phi_s)
        pick = int(self.rng.integers(self.n_actions - 1))
        return pick + (pick >= a_greedy)

    # ------------------------------------------------------------------
    # Training
    # ------------------------------------------------------------------

    def train_step(self, transition: Transition) -> StepDiagnostics:
        """One full learning step; returns the pre-update loss and innovation."""
        phi_sa = self.bank.state_action_features(
            transition.obs, transition.action, self.n_actions
        )
        pre_loss = squared_loss(phi_sa, self.theta, transition.reward)
        h = self.measurement_map(
            transition.obs, transition.action, transition.next_obs, transition.terminal
        )
        self.predict()
        nu = self.mmae_update(h, transition.reward)
        self.bank.rgd_update(
            transition.obs, transition.action, self.theta, transition.reward
        )
        return StepDiagnostics(
            loss=pre_loss, innovation=nu, weights=self.filter.weights.copy()
        )
