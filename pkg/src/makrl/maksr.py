"""Multi-agent adaptive Kalman successor-representation learner.

The successor matrix M predicts discounted feature occupancies: M phi(s, a)
estimates the expected discounted sum of future feature vectors.  Its
column-stacked form m = vec(M) evolves as a Kalman state observed through
the Kronecker-structured map (g^T kron I) m = M g with g = phi(s, a)
- gamma * phi(s', a'), target phi(s, a).  Reward weights theta are learned
separately by the same multiple-model Kalman machinery used for MAK-TD value
weights, with the feature vector itself as the observation map.  Q-values
are reconstructed as theta . (M phi).

Covariance layout: with scalar-times-identity prior, process noise, and
measurement noise, P_m keeps the exact form W kron I_L under both the
predict step and the Joseph-form measurement update (the measurement map is
g^T kron I, so every Kronecker factor on the left is an L x L matrix acting
on columns of M).  Only the L x L factor W is stored; the dense L^2 x L^2
matrix is materialized on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import sr_update_kernel
from .features import RbfBank, loss as squared_loss
from .maktd import (
    DEFAULT_GAMMA,
    DEFAULT_PRIOR_COV,
    DEFAULT_PROCESS_NOISE,
    DEFAULT_R_CANDIDATES,
    AdaptiveKalmanFilter,
    Transition,
)

DEFAULT_SR_MEASUREMENT_NOISE = 1.0


@dataclass
class SrStepDiagnostics:
    """Per-step metrics: reward-model loss (pre-update), innovation norms,
    reward-noise model weights."""

    loss: float
    sr_innovation: float
    reward_innovation: float
    weights: np.ndarray


class FactoredSrFilter:
    """Kalman filter over m = vec(M) with covariance stored as W kron I.

    The measurement m -> M g has matrix H = g^T kron I.  With P_m = W kron I:
    S = (g^T W g + r) I, K = (W g / s) kron I, and the Joseph-form posterior
    covariance is again a Kronecker product with an updated W.  The update
    below applies those closed forms; ``dense_p`` reproduces the full matrix
    for verification at small L.

    An optional bank of measurement-noise candidates mirrors the reward
    pathway's multiple-model adaptation.  The fused mean is exact; the
    mean-spread term of the fused covariance is an outer product that is not
    Kronecker-factored, so it is folded in trace-matched as
    (||nu||^2 / L) * sum_j w_j (k_j - k_bar)(k_j - k_bar)^T on W.
    """

    def __init__(
        self,
        dim: int,
        measurement_noise=DEFAULT_SR_MEASUREMENT_NOISE,
        process_noise: float = DEFAULT_PROCESS_NOISE,
        prior_cov: float = DEFAULT_PRIOR_COV,
        adaptive: bool = False,
    ) -> None:
        self.dim = dim
        self.adaptive = adaptive
        if adaptive:
            self.r_candidates = np.asarray(measurement_noise, dtype=float)
        else:
            self.r_candidates = np.asarray([float(measurement_noise)])
        if self.r_candidates.ndim != 1 or np.any(self.r_candidates <= 0.0):
            raise ValueError("measurement noise must be positive")
        self.q_scale = float(process_noise)
        # m is the single source of truth; m_mat is an order-F view of the
        # same buffer, so writes through either alias stay consistent.
        self.m = np.eye(dim).ravel(order="F")
        self.m_mat = self.m.reshape((dim, dim), order="F")
        self.w = np.eye(dim) * float(prior_cov)
        self.weights = np.full(len(self.r_candidates), 1.0 / len(self.r_candidates))

    def predict(self) -> None:
        """m <- m; P_m <- P_m + Q_M, i.e. W <- W + q I."""
        self.w.flat[:: self.dim + 1] += self.q_scale

    def update(self, g: np.ndarray, target: np.ndarray) -> np.ndarray:
        """Measurement update for target = M g + noise; returns the innovation.

        The kernel updates m (through its flat buffer), W, and the noise
        model weights in place, keeping W exactly symmetric.
        """
        ok, nu = sr_update_kernel(
            self.w,
            self.m,
            self.weights,
            np.ascontiguousarray(g, dtype=float),
            np.ascontiguousarray(target, dtype=float),
            self.r_candidates,
            self.adaptive,
        )
        if not ok:
            raise FloatingPointError(
                "SR innovation covariance not positive; filter state corrupted"
            )
        return nu

    def dense_p(self) -> np.ndarray:
        """Materialize P_m = W kron I (L^2 x L^2); intended for small L."""
        return np.kron(self.w, np.eye(self.dim))


class MakSrLearner:
    """Per-agent successor-representation learner with Kalman-filtered SR,
    multiple-model reward weights, and information-seeking exploration."""

    def __init__(
        self,
        bank: RbfBank,
        n_actions: int,
        rng: np.random.Generator,
        gamma: float = DEFAULT_GAMMA,
        r_candidates=DEFAULT_R_CANDIDATES,
        process_noise: float = DEFAULT_PROCESS_NOISE,
        prior_cov: float = DEFAULT_PRIOR_COV,
        sr_measurement_noise=DEFAULT_SR_MEASUREMENT_NOISE,
        sr_process_noise: float = DEFAULT_PROCESS_NOISE,
        sr_prior_cov: float = DEFAULT_PRIOR_COV,
        sr_adaptive_noise: bool = False,
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
        dim = bank.n_features(n_actions)
        self.reward_filter = AdaptiveKalmanFilter(
            dim=dim,
            r_candidates=r_candidates,
            process_noise=process_noise,
            prior_cov=prior_cov,
            likelihood=likelihood,
        )
        self.sr_filter = FactoredSrFilter(
            dim=dim,
            measurement_noise=sr_measurement_noise,
            process_noise=sr_process_noise,
            prior_cov=sr_prior_cov,
            adaptive=sr_adaptive_noise,
        )

    # Named state, following the usual symbols.
    @property
    def dim(self) -> int:
        return self.reward_filter.dim

    @property
    def m(self) -> np.ndarray:
        return self.sr_filter.m

    @property
    def m_matrix(self) -> np.ndarray:
        return self.sr_filter.m_mat

    @property
    def p_m(self) -> np.ndarray:
        """Dense SR covariance (L^2 x L^2); materialized on demand."""
        return self.sr_filter.dense_p()

    @property
    def theta(self) -> np.ndarray:
        return self.reward_filter.theta

    @theta.setter
    def theta(self, value: np.ndarray) -> None:
        self.reward_filter.theta = np.ascontiguousarray(value, dtype=float)

    @property
    def p_theta(self) -> np.ndarray:
        return self.reward_filter.p

    @property
    def last_weights(self) -> np.ndarray:
        return self.reward_filter.weights

    # ------------------------------------------------------------------
    # Q reconstruction and policies
    # ------------------------------------------------------------------

    def q_from_sr(self, obs: np.ndarray, action: int) -> float:
        """Q(s, a) = theta . (M phi(s, a))."""
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range [0, {self.n_actions})")
        phi_s = self.bank.state_features(obs)
        nb = self.bank.block_size
        block = self.sr_filter.m_mat[:, action * nb : (action + 1) * nb]
        return float(self.theta @ (block @ phi_s))

    def _q_values_from_phi(self, phi_s: np.ndarray) -> np.ndarray:
        # theta^T M phi(s, a) for all actions at once: contract theta with M
        # first, then read one block per action.
        u = self.theta @ self.sr_filter.m_mat
        return u.reshape(self.n_actions, self.bank.block_size) @ phi_s

    def _greedy_from_phi(self, phi_s: np.ndarray) -> int:
        q = self._q_values_from_phi(phi_s)
        best = np.flatnonzero(q == q.max())
        if best.size == 1:
            return int(best[0])
        return int(best[self.rng.integers(best.size)])

    def greedy_action(self, obs: np.ndarray) -> int:
        return self._greedy_from_phi(self.bank.state_features(obs))

    def select_action_explore(self, obs: np.ndarray) -> int:
        """Same information rule as MAK-TD, with greedy actions taken from
        the SR-reconstructed Q.  As there, the non-greedy actions tie
        strictly above the greedy one, so the tie-broken argmax reduces to
        a uniform draw over the non-greedy actions (over all actions at
        gamma = 0, where the scores all tie)."""
        phi_s = self.bank.state_features(obs)
        if self.greedy_mix > 0.0 and self.rng.random() < self.greedy_mix:
            return self._greedy_from_phi(phi_s)
        if self.gamma == 0.0 or self.n_actions == 1:
            return int(self.rng.integers(self.n_actions))
        a_greedy = self._greedy_from_phi(phi_s)
        pick = int(self.rng.integers(self.n_actions - 1))
        return pick + (pick >= a_greedy)

    # ------------------------------------------------------------------
    # Measurement construction and filter steps
    # ------------------------------------------------------------------

    def sr_measurement_vector(
        self, obs: np.ndarray, action: int, next_obs: np.ndarray, terminal: bool = False
    ) -> tuple[np.ndarray, np.ndarray]:
        """(g, target) with g = phi(s,a) - gamma * phi(s',a') and target =
        phi(s,a); a' is greedy under q_from_sr.  Terminal: g = phi(s,a)."""
        nb = self.bank.block_size
        phi_s = self.bank.state_features(obs)
        target = np.zeros(self.dim)
        target[action * nb : (action + 1) * nb] = phi_s
        g = target.copy()
        if not terminal:
            phi_next = self.bank.state_features(next_obs)
            a_next = self._greedy_from_phi(phi_next)
            g[a_next * nb : (a_next + 1) * nb] -= self.gamma * phi_next
        return g, target

    def sr_predict(self) -> None:
        self.sr_filter.predict()

    def sr_update(self, g: np.ndarray, target: np.ndarray) -> np.ndarray:
        """Kalman measurement update of (m, P_m); returns the innovation."""
        return self.sr_filter.update(g, target)

    def reward_update(self, phi: np.ndarray, reward: float) -> float:
        """Multiple-model Kalman step on theta with observation map h = phi."""
        values = getattr(phi, "values", phi)
        self.reward_filter.predict()
        return self.reward_filter.update(np.asarray(values, dtype=float), reward)

    # ------------------------------------------------------------------
    # Training
    # ------------------------------------------------------------------

    def train_step(self, transition: Transition) -> SrStepDiagnostics:
        """One full learning step: reward MMAE, SR Kalman update, RGD."""
        phi_sa = self.bank.state_action_features(
            transition.obs, transition.action, self.n_actions
        )
        pre_loss = squared_loss(phi_sa, self.theta, transition.reward)
        g, target = self.sr_measurement_vector(
            transition.obs, transition.action, transition.next_obs, transition.terminal
        )
        reward_nu = self.reward_update(phi_sa, transition.reward)
        self.sr_predict()
        sr_nu = self.sr_update(g, target)
        self.bank.rgd_update(
            transition.obs, transition.action, self.theta, transition.reward
        )
        return SrStepDiagnostics(
            loss=pre_loss,
            sr_innovation=float(np.linalg.norm(sr_nu)),
            reward_innovation=reward_nu,
            weights=self.reward_filter.weights.copy(),
        )
