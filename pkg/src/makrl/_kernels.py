"""Hot numerical kernels with a JIT path and a vectorized NumPy fallback.

Each kernel exists twice: a loop formulation compiled by numba when it is
importable, and a NumPy formulation used otherwise.  Both compute the same
quantities; the test suite cross-checks them on random instances.  The JIT
path exists because the per-step working set is tiny (L = 50) and the
NumPy call overhead dominates the arithmetic at that size.

Mutating conventions: kernels update their array arguments in place and
keep symmetric matrices exactly symmetric by mirrored assignment.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    USING_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    USING_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


# ----------------------------------------------------------------------
# RBF state features: out = [1, exp(-0.5 d_n^T inv_n d_n), ...]
# ----------------------------------------------------------------------


def _state_features_np(means, inv_covs, obs, out):
    diff = obs - means
    quad = np.einsum("nd,nde,ne->n", diff, inv_covs, diff)
    out[0] = 1.0
    np.exp(-0.5 * quad, out=out[1:])
    return out


@njit(cache=True)
def _state_features_nb(means, inv_covs, obs, out):  # pragma: no cover - jit
    n_rbf, dim = means.shape
    out[0] = 1.0
    for n in range(n_rbf):
        quad = 0.0
        for i in range(dim):
            di = obs[i] - means[n, i]
            acc = 0.0
            for j in range(dim):
                acc += inv_covs[n, i, j] * (obs[j] - means[n, j])
            quad += di * acc
        out[n + 1] = np.exp(-0.5 * quad)
    return out


# ----------------------------------------------------------------------
# Fused multiple-model Kalman update on (p, theta, weights).
# Returns (ok, innovation); ok is False when the innovation covariance is
# not positive.  full_lik selects the Gaussian density including the
# determinant factor; otherwise only the exponent enters the weights.
# ----------------------------------------------------------------------


def _akf_update_np(p, theta, weights, h, y, r_candidates, full_lik):
    c = p @ h
    c_bar = float(h @ c)
    if c_bar + r_candidates.min() <= 0.0:
        return False, 0.0
    s = c_bar + r_candidates
    nu = y - float(h @ theta)
    if full_lik:
        loglik = -0.5 * (np.log(2.0 * np.pi * s) + (nu * nu) / s)
    else:
        loglik = -0.5 * (nu * nu) / s
    logw = np.log(np.maximum(weights, 1e-300)) + loglik
    logw -= logw.max()
    w = np.exp(logw)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        weights[:] = 1.0 / len(weights)
    else:
        weights[:] = w / total
    inv_s = 1.0 / s
    beta = float(weights @ inv_s)
    beta2 = float(weights @ (inv_s * inv_s))
    theta += (nu * beta) * c
    coef = nu * nu * (beta2 - beta * beta) - beta
    p += coef * (c[:, None] * c)
    return True, nu


@njit(cache=True)
def _akf_update_nb(p, theta, weights, h, y, r_candidates, full_lik):  # pragma: no cover
    dim = theta.shape[0]
    n_mod = r_candidates.shape[0]
    c = np.empty(dim)
    c_bar = 0.0
    pred = 0.0
    for i in range(dim):
        acc = 0.0
        for j in range(dim):
            acc += p[i, j] * h[j]
        c[i] = acc
        c_bar += h[i] * acc
        pred += h[i] * theta[i]
    r_min = r_candidates[0]
    for m in range(1, n_mod):
        if r_candidates[m] < r_min:
            r_min = r_candidates[m]
    if c_bar + r_min <= 0.0:
        return False, 0.0
    nu = y - pred
    log_max = -np.inf
    logw = np.empty(n_mod)
    for m in range(n_mod):
        s = c_bar + r_candidates[m]
        if full_lik:
            ll = -0.5 * (np.log(2.0 * np.pi * s) + (nu * nu) / s)
        else:
            ll = -0.5 * (nu * nu) / s
        wm = weights[m]
        if wm < 1e-300:
            wm = 1e-300
        logw[m] = np.log(wm) + ll
        if logw[m] > log_max:
            log_max = logw[m]
    total = 0.0
    for m in range(n_mod):
        logw[m] = np.exp(logw[m] - log_max)
        total += logw[m]
    if not np.isfinite(total) or total <= 0.0:
        for m in range(n_mod):
            weights[m] = 1.0 / n_mod
    else:
        for m in range(n_mod):
            weights[m] = logw[m] / total
    beta = 0.0
    beta2 = 0.0
    for m in range(n_mod):
        inv_s = 1.0 / (c_bar + r_candidates[m])
        beta += weights[m] * inv_s
        beta2 += weights[m] * inv_s * inv_s
    scale = nu * beta
    for i in range(dim):
        theta[i] += scale * c[i]
    coef = nu * nu * (beta2 - beta * beta) - beta
    for i in range(dim):
        pii = p[i, i] + coef * (c[i] * c[i])
        p[i, i] = pii
        for j in range(i + 1, dim):
            val = p[i, j] + coef * (c[i] * c[j])
            p[i, j] = val
            p[j, i] = val
    return True, nu


# ----------------------------------------------------------------------
# Factored SR update on (w, m, weights) with m column-stacked:
# M[r, c] = m[c * L + r].  Returns (ok, innovation vector).
# ----------------------------------------------------------------------


def _sr_update_np(w, m, weights, g, target, r_candidates, adaptive):
    dim = g.shape[0]
    c = w @ g
    c_bar = float(g @ c)
    if c_bar + r_candidates.min() <= 0.0:
        return False, np.zeros(dim)
    s = c_bar + r_candidates
    m_mat = m.reshape((dim, dim), order="F")
    nu = target - m_mat @ g
    if adaptive:
        sq = float(nu @ nu)
        loglik = -0.5 * (dim * np.log(2.0 * np.pi * s) + sq / s)
        logw = np.log(np.maximum(weights, 1e-300)) + loglik
        logw -= logw.max()
        wts = np.exp(logw)
        total = wts.sum()
        if not np.isfinite(total) or total <= 0.0:
            weights[:] = 1.0 / len(weights)
        else:
            weights[:] = wts / total
    inv_s = 1.0 / s
    beta = float(weights @ inv_s)
    beta2 = float(weights @ (inv_s * inv_s))
    m_mat += nu[:, None] * (beta * c)
    spread = (float(nu @ nu) / dim) * (beta2 - beta * beta)
    w += (spread - beta) * (c[:, None] * c)
    return True, nu


@njit(cache=True)
def _sr_update_nb(w, m, weights, g, target, r_candidates, adaptive):  # pragma: no cover
    dim = g.shape[0]
    n_mod = r_candidates.shape[0]
    c = np.empty(dim)
    c_bar = 0.0
    for i in range(dim):
        acc = 0.0
        for j in range(dim):
            acc += w[i, j] * g[j]
        c[i] = acc
        c_bar += g[i] * acc
    r_min = r_candidates[0]
    for mm in range(1, n_mod):
        if r_candidates[mm] < r_min:
            r_min = r_candidates[mm]
    nu = np.zeros(dim)
    if c_bar + r_min <= 0.0:
        return False, nu
    sq = 0.0
    for i in range(dim):
        acc = target[i]
        for col in range(dim):
            acc -= m[col * dim + i] * g[col]
        nu[i] = acc
        sq += acc * acc
    if adaptive:
        log_max = -np.inf
        logw = np.empty(n_mod)
        for mm in range(n_mod):
            s = c_bar + r_candidates[mm]
            ll = -0.5 * (dim * np.log(2.0 * np.pi * s) + sq / s)
            wm = weights[mm]
            if wm < 1e-300:
                wm = 1e-300
            logw[mm] = np.log(wm) + ll
            if logw[mm] > log_max:
                log_max = logw[mm]
        total = 0.0
        for mm in range(n_mod):
            logw[mm] = np.exp(logw[mm] - log_max)
            total += logw[mm]
        if not np.isfinite(total) or total <= 0.0:
            for mm in range(n_mod):
                weights[mm] = 1.0 / n_mod
        else:
            for mm in range(n_mod):
                weights[mm] = logw[mm] / total
    beta = 0.0
    beta2 = 0.0
    for mm in range(n_mod):
        inv_s = 1.0 / (c_bar + r_candidates[mm])
        beta += weights[mm] * inv_s
        beta2 += weights[mm] * inv_s * inv_s
    for col in range(dim):
        bc = beta * c[col]
        base = col * dim
        for row in range(dim):
            m[base + row] += nu[row] * bc
    spread = (sq / dim) * (beta2 - beta * beta)
    coef = spread - beta
    for i in range(dim):
        w[i, i] += coef * (c[i] * c[i])
        for j in range(i + 1, dim):
            val = w[i, j] + coef * (c[i] * c[j])
            w[i, j] = val
            w[j, i] = val
    return True, nu


# ----------------------------------------------------------------------
# Restricted gradient step on the RBF bank.  Returns a status code:
# 0 no-op, 1 means updated, 2 covariances updated (inverses refreshed by
# Sherman-Morrison), 3 covariances updated but the eigenvalue floor can no
# longer be certified, so the caller must run the eigendecomposition
# repair (which also rebuilds the inverses).
# ----------------------------------------------------------------------


def _rgd_step_np(
    means, covs, inv_covs, eig_lower, obs, phi_tail, theta_tail, err, q_val,
    rate_mean, rate_cov, floor,
):
    coef = err * theta_tail * phi_tail
    if not np.any(coef):
        return 0
    diff = obs - means
    sig_d = np.einsum("nde,ne->nd", inv_covs, diff)
    if abs(err) * q_val > 0.0:
        alphas = rate_cov * coef
        covs -= alphas[:, None, None] * (sig_d[:, :, None] * sig_d[:, None, :])
        eig_lower -= np.maximum(alphas, 0.0) * np.einsum("nd,nd->n", sig_d, sig_d)
        if np.any(eig_lower < floor):
            return 3
        w = np.einsum("nde,ne->nd", inv_covs, sig_d)
        denom = 1.0 - alphas * np.einsum("nd,nd->n", sig_d, w)
        if np.any(denom <= 1e-12):
            return 3
        inv_covs += (alphas / denom)[:, None, None] * (w[:, :, None] * w[:, None, :])
        return 2
    means -= (2.0 * rate_mean) * coef[:, None] * sig_d
    return 1


@njit(cache=True)
def _rgd_step_nb(
    means, covs, inv_covs, eig_lower, obs, phi_tail, theta_tail, err, q_val,
    rate_mean, rate_cov, floor,
):  # pragma: no cover - jit
    n_rbf, dim = means.shape
    any_coef = False
    coef = np.empty(n_rbf)
    for n in range(n_rbf):
        coef[n] = err * theta_tail[n] * phi_tail[n]
        if coef[n] != 0.0:
            any_coef = True
    if not any_coef:
        return 0
    sig_d = np.empty((n_rbf, dim))
    for n in range(n_rbf):
        for i in range(dim):
            acc = 0.0
            for j in range(dim):
                acc += inv_covs[n, i, j] * (obs[j] - means[n, j])
            sig_d[n, i] = acc
    if abs(err) * q_val > 0.0:
        needs_repair = False
        for n in range(n_rbf):
            alpha = rate_cov * coef[n]
            un = 0.0
            for i in range(dim):
                ui = sig_d[n, i]
                un += ui * ui
                covs[n, i, i] -= alpha * (ui * ui)
                for j in range(i + 1, dim):
                    val = covs[n, i, j] - alpha * (ui * sig_d[n, j])
                    covs[n, i, j] = val
                    covs[n, j, i] = val
            if alpha > 0.0:
                eig_lower[n] -= alpha * un
            if eig_lower[n] < floor:
                needs_repair = True
        if needs_repair:
            return 3
        for n in range(n_rbf):
            alpha = rate_cov * coef[n]
            wv = np.empty(dim)
            uw = 0.0
            for i in range(dim):
                acc = 0.0
                for j in range(dim):
                    acc += inv_covs[n, i, j] * sig_d[n, j]
                wv[i] = acc
                uw += sig_d[n, i] * acc
            denom = 1.0 - alpha * uw
            if denom <= 1e-12:
                return 3
            scale = alpha / denom
            for i in range(dim):
                inv_covs[n, i, i] += scale * (wv[i] * wv[i])
                for j in range(i + 1, dim):
                    val = inv_covs[n, i, j] + scale * (wv[i] * wv[j])
                    inv_covs[n, i, j] = val
                    inv_covs[n, j, i] = val
        return 2
    for n in range(n_rbf):
        scale = 2.0 * rate_mean * coef[n]
        for i in range(dim):
            means[n, i] -= scale * sig_d[n, i]
    return 1


if USING_NUMBA:
    state_features_kernel = _state_features_nb
    akf_update_kernel = _akf_update_nb
    sr_update_kernel = _sr_update_nb
    rgd_step_kernel = _rgd_step_nb
else:  # pragma: no cover - exercised only without numba
    state_features_kernel = _state_features_np
    akf_update_kernel = _akf_update_np
    sr_update_kernel = _sr_update_np
    rgd_step_kernel = _rgd_step_np


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs (no-op without numba)."""
    means = np.zeros((1, 1))
    inv_covs = np.ones((1, 1, 1))
    state_features_kernel(means, inv_covs, np.zeros(1), np.empty(2))
    p = np.eye(2)
    theta = np.zeros(2)
    weights = np.array([0.5, 0.5])
    akf_update_kernel(p, theta, weights, np.ones(2), 0.5, np.array([0.1, 1.0]), True)
    w = np.eye(2)
    m = np.eye(2).ravel(order="F").copy()
    sw = np.array([1.0])
    sr_update_kernel(w, m, sw, np.ones(2), np.ones(2), np.array([1.0]), False)
    covs = np.eye(1).reshape(1, 1, 1).copy()
    inv = covs.copy()
    rgd_step_kernel(
        means.copy(), covs, inv, np.ones(1), np.zeros(1), np.ones(1), np.ones(1),
        0.5, 1.0, 1e-3, 1e-3, 1e-6,
    )
