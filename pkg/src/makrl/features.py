"""Radial-basis feature encoding with online restricted gradient descent.

A bank of Gaussian RBFs plus a constant bias maps a continuous observation
to a compact state feature vector.  State-action features place that vector
in one contiguous block per action, leaving the other blocks zero, so value
weights factor cleanly across actions.

The bank adapts online: after each reward the squared prediction error is
differentiated with respect to the RBF means and covariances, but only one
parameter set is moved per call.  When the weighted feature sum is positive
the covariances shrink toward the data; otherwise the means move.  This
restriction keeps the covariances from expanding without bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import rgd_step_kernel, state_features_kernel

COV_EIG_FLOOR = 1e-6

# Exact inverses and eigenvalue bounds are refreshed at least this often
# (in covariance updates) to stop rank-one-update roundoff from drifting.
_EXACT_REFRESH_PERIOD = 4096


@dataclass
class FeatureVector:
    """State-action feature vector with exactly one nonzero block."""

    values: np.ndarray
    block_size: int
    active_block: int

    def dot(self, theta: np.ndarray) -> float:
        # Only the active block can be nonzero, so the full dot product
        # reduces to one block; keep the full form for clarity.
        return float(self.values @ theta)


@dataclass
class RbfBank:
    """Adaptive RBF bank: ``n_rbf`` Gaussians plus a leading bias of 1.

    Parameters
    ----------
    means : ndarray, shape (n_rbf, obs_dim)
        RBF centers in observation units.
    covariances : ndarray, shape (n_rbf, obs_dim, obs_dim)
        Symmetric positive-definite RBF covariances.
    rate_mean, rate_cov : float
        Gradient step sizes for the mean and covariance updates.
    """

    means: np.ndarray
    covariances: np.ndarray
    rate_mean: float = 1e-3
    rate_cov: float = 1e-3
    _inv_covs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        # Private copies: updates mutate these arrays in place.
        self.means = np.array(np.atleast_2d(self.means), dtype=float, order="C")
        covs = np.asarray(self.covariances, dtype=float)
        if covs.ndim == 2:
            covs = covs[None, :, :]
        self.covariances = np.array(covs, dtype=float, order="C")
        n_rbf, obs_dim = self.means.shape
        if self.covariances.shape != (n_rbf, obs_dim, obs_dim):
            raise ValueError(
                f"covariances shape {self.covariances.shape} does not match "
                f"{n_rbf} means of dimension {obs_dim}"
            )
        for n in range(n_rbf):
            cov = self.covariances[n]
            if not np.allclose(cov, cov.T):
                raise ValueError(f"covariance {n} is not symmetric")
            if np.linalg.eigvalsh(cov).min() <= 0.0:
                raise ValueError(f"covariance {n} is not positive definite")
        # Two-slot feature cache keyed on a parameter version counter that
        # every effective parameter update bumps.
        self._cache: list = [None, None]
        self._param_version = 0
        self._updates_since_refresh = 0
        self._refresh_inverses()
        self._eig_lower = np.linalg.eigvalsh(self.covariances).min(axis=1)

    @property
    def n_rbf(self) -> int:
        return self.means.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.means.shape[1]

    @property
    def block_size(self) -> int:
        # Bias entry plus one entry per RBF.
        return self.n_rbf + 1

    def n_features(self, n_actions: int) -> int:
        return self.block_size * n_actions

    def _refresh_inverses(self) -> None:
        self._inv_covs = np.ascontiguousarray(np.linalg.inv(self.covariances))

    # ------------------------------------------------------------------
    # Encoding
    # ------------------------------------------------------------------

    def state_features(self, obs: np.ndarray) -> np.ndarray:
        """Return ``[1, phi_1(obs), ..., phi_n(obs)]`` of length n_rbf + 1.

        The returned array may be shared with an internal cache; callers
        must treat it as read-only.
        """
        obs = np.ascontiguousarray(obs, dtype=float)
        if obs.shape != (self.obs_dim,):
            raise ValueError(
                f"observation shape {obs.shape} does not match obs_dim {self.obs_dim}"
            )
        key = (self._param_version, obs.tobytes())
        cache = self._cache
        for entry in cache:
            if entry is not None and entry[0] == key:
                return entry[1]
        out = np.empty(self.block_size)
        state_features_kernel(self.means, self._inv_covs, obs, out)
        cache[1] = cache[0]
        cache[0] = (key, out)
        return out

    def state_action_features(
        self, obs: np.ndarray, action: int, n_actions: int
    ) -> FeatureVector:
        """Place ``state_features(obs)`` in block ``action`` of a length-L vector."""
        if not 0 <= action < n_actions:
            raise ValueError(f"action {action} out of range [0, {n_actions})")
        nb = self.block_size
        values = np.zeros(nb * n_actions)
        values[action * nb : (action + 1) * nb] = self.state_features(obs)
        return FeatureVector(values=values, block_size=nb, active_block=action)

    # ------------------------------------------------------------------
    # Online adaptation
    # ------------------------------------------------------------------

    def rgd_update(
        self, obs: np.ndarray, action: int, theta: np.ndarray, reward: float
    ) -> "RbfBank":
        """Restricted gradient step on the squared prediction error.

        With q = theta . phi(obs, action) and e = q - reward, moves either
        the covariances (when sqrt(e^2) * q > 0) or the means (otherwise)
        down the gradient of e^2.  Covariances are kept symmetric positive
        definite via an eigenvalue floor.
        """
        obs = np.ascontiguousarray(obs, dtype=float)
        theta = np.asarray(theta, dtype=float)
        nb = self.block_size
        n_actions = theta.shape[0] // nb
        if theta.shape[0] != nb * n_actions or not 0 <= action < n_actions:
            raise ValueError("theta length incompatible with bank block size")

        phi_s = self.state_features(obs)
        block = theta[action * nb : (action + 1) * nb]
        q = float(block @ phi_s)
        err = q - reward
        if err == 0.0:
            return self

        status = rgd_step_kernel(
            self.means,
            self.covariances,
            self._inv_covs,
            self._eig_lower,
            obs,
            np.ascontiguousarray(phi_s[1:]),
            np.ascontiguousarray(block[1:]),
            err,
            q,
            self.rate_mean,
            self.rate_cov,
            COV_EIG_FLOOR,
        )
        if status == 0:
            return self
        self._param_version += 1
        if status == 3:
            # Covariances moved but the tracked eigenvalue lower bound (or
            # the rank-one inverse update) can no longer certify positive
            # definiteness; fall back to the exact repair.
            self._repair_covariances()
        elif status == 2:
            self._updates_since_refresh += 1
            if self._updates_since_refresh >= _EXACT_REFRESH_PERIOD:
                self._exact_refresh()
        return self

    def _exact_refresh(self) -> None:
        self._refresh_inverses()
        self._eig_lower = np.linalg.eigvalsh(self.covariances).min(axis=1)
        self._updates_since_refresh = 0

    def _repair_covariances(self) -> None:
        """Symmetrize and clamp eigenvalues at the floor; restores exact
        inverses and eigenvalue bounds."""
        sym = 0.5 * (self.covariances + np.transpose(self.covariances, (0, 2, 1)))
        vals, vecs = np.linalg.eigh(sym)
        vals = np.maximum(vals, COV_EIG_FLOOR)
        self.covariances = np.ascontiguousarray(
            np.einsum("nij,nj,nkj->nik", vecs, vals, vecs)
        )
        self._eig_lower = vals.min(axis=1)
        self._updates_since_refresh = 0
        self._refresh_inverses()


def loss(phi: FeatureVector | np.ndarray, theta: np.ndarray, reward: float) -> float:
    """Squared prediction error (phi . theta - reward)^2."""
    values = phi.values if isinstance(phi, FeatureVector) else np.asarray(phi)
    resid = float(values @ theta) - reward
    return resid * resid


def make_bank(
    n_rbf: int,
    obs_low: np.ndarray,
    obs_high: np.ndarray,
    rng: np.random.Generator,
    rate_mean: float = 1e-3,
    rate_cov: float = 1e-3,
) -> RbfBank:
    """Bank with means uniform in the observation box and identity covariances."""
    obs_low = np.asarray(obs_low, dtype=float)
    obs_high = np.asarray(obs_high, dtype=float)
    if obs_low.shape != obs_high.shape or obs_low.ndim != 1:
        raise ValueError("observation bounds must be 1-D vectors of equal length")
    obs_dim = obs_low.shape[0]
    means = rng.uniform(obs_low, obs_high, size=(n_rbf, obs_dim))
    covariances = np.broadcast_to(
        np.eye(obs_dim), (n_rbf, obs_dim, obs_dim)
    ).copy()
    return RbfBank(
        means=means,
        covariances=covariances,
        rate_mean=rate_mean,
        rate_cov=rate_cov,
    )
