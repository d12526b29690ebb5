"""Gaussian-process regression with a Matérn-5/2 ARD kernel.

Covers the surrogate half of the optimization loop: fitting (constant
mean, hyperparameters by maximizing the log marginal likelihood with
L-BFGS-B restarts and analytic gradients), posterior prediction, and
expected improvement for maximization.

The analytic gradient matters: the model is refit at every optimization
step, so each fit has to stay in the tens of milliseconds at n <= 128.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.special import ndtr

from .simplex import SearchPoint

JITTER = 1e-8
LENGTHSCALE_BOUNDS = (1e-2, 1e2)
SIGNAL_VARIANCE_FACTOR = (1e-4, 1e4)
DUPLICATE_TOL = 1e-9
N_RESTARTS = 8

_SQRT5 = math.sqrt(5.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class DuplicatePointError(ValueError):
    """Two training inputs coincide to within DUPLICATE_TOL in log space."""


@dataclass(frozen=True, eq=False)
class Observation:
    """One evaluated point: log-box location and finite objective value."""

    point: SearchPoint
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v):
            raise ValueError(f"observation value must be finite, got {v!r}")
        object.__setattr__(self, "value", v)

    def to_json(self) -> dict:
        return {"log_coords": self.point.log_coords.tolist(), "value": self.value}

    @classmethod
    def from_json(cls, obj: dict) -> "Observation":
        return cls(SearchPoint(np.asarray(obj["log_coords"], dtype=float)), obj["value"])


def _matern52(X1: np.ndarray, X2: np.ndarray, lengthscales: np.ndarray, signal_variance: float) -> np.ndarray:
    diff = (X1[:, None, :] - X2[None, :, :]) / lengthscales
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    r = np.sqrt(r2)
    s5r = _SQRT5 * r
    return signal_variance * (1.0 + s5r + (5.0 / 3.0) * r2) * np.exp(-s5r)


def _nll_and_grad(theta: np.ndarray, X: np.ndarray, yc: np.ndarray, noise: float):
    """Negative log marginal likelihood and its gradient.

    theta = (log lengthscales..., log signal_variance).  Returns a large
    finite value with a zero gradient when the kernel matrix cannot be
    factorized, which makes L-BFGS-B back off the line search.
    """
    n, d = X.shape
    ls = np.exp(theta[:d])
    sv = math.exp(theta[d])

    diff = (X[:, None, :] - X[None, :, :]) / ls
    sq = diff * diff
    r2 = np.einsum("ijk->ij", sq)
    r = np.sqrt(r2)
    s5r = _SQRT5 * r
    decay = np.exp(-s5r)
    K = sv * (1.0 + s5r + (5.0 / 3.0) * r2) * decay
    K[np.diag_indices_from(K)] += noise

    try:
        L = cholesky(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)

    alpha = cho_solve((L, True), yc)
    nll = 0.5 * float(yc @ alpha) + float(np.log(np.diag(L)).sum()) + 0.5 * n * math.log(2.0 * math.pi)

    # dNLL/dtheta_j = -0.5 * sum(A * dK/dtheta_j), A = alpha alpha^T - K^-1
    Kinv = cho_solve((L, True), np.eye(n))
    A = np.outer(alpha, alpha) - Kinv

    grad = np.empty_like(theta)
    # dK/d(log ls_k) = sv * (5/3) * (1 + s5r) * decay * diff_k^2
    base = sv * (5.0 / 3.0) * (1.0 + s5r) * decay
    for k in range(d):
        grad[k] = -0.5 * float(np.sum(A * (base * sq[:, :, k])))
    # dK/d(log sv) = K - noise*I  (the kernel part scales with sv)
    grad[d] = -0.5 * float(np.sum(A * (K - noise * np.eye(n))))
    return nll, grad


@dataclass(eq=False)
class GPModel:
    """Fitted GP: kernel hyperparameters plus a cached factorization."""

    X: np.ndarray  # (n, d) log coordinates
    y: np.ndarray  # (n,)
    mean: float
    lengthscales: np.ndarray  # (d,)
    signal_variance: float
    noise_variance: float
    L: np.ndarray = field(repr=False)  # lower Cholesky of K + noise*I
    alpha: np.ndarray = field(repr=False)  # (K + noise*I)^-1 (y - mean)
    log_marginal_likelihood: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def best_observed(self) -> float:
        return float(self.y.max())

    def posterior_batch(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predictive mean and variance of the latent function at each row."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        k_star = _matern52(Xq, self.X, self.lengthscales, self.signal_variance)
        mu = self.mean + k_star @ self.alpha
        v = solve_triangular(self.L, k_star.T, lower=True)
        var = self.signal_variance - np.einsum("ij,ij->j", v, v)
        return mu, np.maximum(var, 0.0)

    def posterior(self, p: SearchPoint) -> tuple[float, float]:
        mu, var = self.posterior_batch(p.log_coords[None, :])
        return float(mu[0]), float(var[0])

    def hyperparameters(self) -> dict:
        return {
            "lengthscales": self.lengthscales.tolist(),
            "signal_variance": self.signal_variance,
        }


def _factorize(X, yc, ls, sv, noise):
    """Cholesky of K + noise*I, escalating the ridge if needed."""
    K = _matern52(X, X, ls, sv)
    n = X.shape[0]
    ridge = noise
    while True:
        try:
            L = cholesky(K + ridge * np.eye(n), lower=True)
            return L, ridge
        except np.linalg.LinAlgError:
            ridge *= 100.0
            if ridge > 1e-2 * max(sv, 1.0):
                raise


def _build_model(X, y, mean, ls, sv, noise) -> GPModel:
    yc = y - mean
    L, ridge = _factorize(X, yc, ls, sv, noise)
    alpha = cho_solve((L, True), yc)
    n = X.shape[0]
    lml = -0.5 * float(yc @ alpha) - float(np.log(np.diag(L)).sum()) - 0.5 * n * math.log(2.0 * math.pi)
    return GPModel(
        X=X, y=y, mean=mean,
        lengthscales=ls, signal_variance=sv, noise_variance=ridge,
        L=L, alpha=alpha, log_marginal_likelihood=lml,
    )


def fit(
    observations: Sequence[Observation],
    rng: np.random.Generator,
    n_restarts: int = N_RESTARTS,
    noise_variance: float = JITTER,
    warm_start: dict | None = None,
) -> GPModel:
    """Fit hyperparameters by maximizing the log marginal likelihood.

    Runs L-BFGS-B from n_restarts starting points: one deterministic
    (warm_start when given, otherwise a data-span heuristic) plus
    n_restarts - 1 points drawn log-uniformly inside the bounds.  The rng
    draw count does not depend on warm_start, so resumed sessions replay
    identically.
    """
    if len(observations) < 2:
        raise ValueError("need at least 2 observations to fit a GP")
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    X = np.array([o.point.log_coords for o in observations], dtype=float)
    y = np.array([o.value for o in observations], dtype=float)
    n, d = X.shape

    dist = np.max(np.abs(X[:, None, :] - X[None, :, :]), axis=2)
    dist[np.diag_indices_from(dist)] = np.inf
    if dist.min() < DUPLICATE_TOL:
        i, j = np.unravel_index(int(dist.argmin()), dist.shape)
        raise DuplicatePointError(f"observations {i} and {j} coincide in log space")

    mean = float(y.mean())
    yc = y - mean
    var_y = float(yc @ yc) / n
    var_floor = max(var_y, 1e-10)
    sv_lo = SIGNAL_VARIANCE_FACTOR[0] * var_floor
    sv_hi = SIGNAL_VARIANCE_FACTOR[1] * var_floor

    lo = np.log(np.full(d + 1, LENGTHSCALE_BOUNDS[0]))
    hi = np.log(np.full(d + 1, LENGTHSCALE_BOUNDS[1]))
    lo[d], hi[d] = math.log(sv_lo), math.log(sv_hi)
    bounds = list(zip(lo, hi))

    # rng consumption is fixed regardless of warm_start availability
    random_starts = rng.uniform(lo, hi, size=(max(n_restarts - 1, 0), d + 1))

    if warm_start is not None:
        ls0 = np.asarray(warm_start["lengthscales"], dtype=float)
        sv0 = float(warm_start["signal_variance"])
        first = np.concatenate([np.log(ls0), [math.log(sv0)]])
    else:
        span = np.maximum(X.max(axis=0) - X.min(axis=0), 0.5)
        first = np.concatenate([np.log(span / 2.0), [math.log(var_floor)]])
    starts = np.vstack([np.clip(first, lo, hi), random_starts])[:n_restarts]

    best_theta, best_nll = None, np.inf
    for start in starts:
        res = minimize(
            _nll_and_grad, start, args=(X, yc, noise_variance),
            method="L-BFGS-B", jac=True, bounds=bounds,
        )
        if res.fun < best_nll:
            best_nll, best_theta = res.fun, res.x
    if best_theta is None or not np.isfinite(best_nll):
        raise RuntimeError("marginal-likelihood optimization failed from every start")

    ls = np.exp(best_theta[:d])
    sv = math.exp(best_theta[d])
    return _build_model(X, y, mean, ls, sv, noise_variance)


def condition_on(model: GPModel, new_X: np.ndarray, new_y: float | np.ndarray) -> GPModel:
    """Model with extra observations appended, hyperparameters unchanged.

    Used by the constant-liar batch loop: lies join the training set only
    in the returned copy, the input model is never mutated.
    """
    new_X = np.atleast_2d(np.asarray(new_X, dtype=float))
    new_y = np.broadcast_to(np.asarray(new_y, dtype=float), (new_X.shape[0],))
    X = np.vstack([model.X, new_X])
    y = np.concatenate([model.y, new_y])
    return _build_model(X, y, model.mean, model.lengthscales, model.signal_variance, model.noise_variance)


def ei_values(mu: np.ndarray, sigma: np.ndarray, best: float) -> np.ndarray:
    """Expected improvement over `best` for maximization, elementwise.

    EI = sigma * (z * Phi(z) + phi(z)) with z = (mu - best) / sigma; the
    degenerate sigma < 1e-12 branch returns max(mu - best, 0).  Clamped at
    zero: the closed form is nonnegative but cancellation for z << 0 can
    leave a negative ulp.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    improvement = mu - best
    out = np.maximum(improvement, 0.0)
    live = sigma >= 1e-12
    if np.any(live):
        z = improvement[live] / sigma[live]
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * z * z)
        out[live] = sigma[live] * (z * ndtr(z) + pdf)
    return np.maximum(out, 0.0)


def ei_batch(model: GPModel, Xq: np.ndarray, best: float) -> np.ndarray:
    mu, var = model.posterior_batch(Xq)
    return ei_values(mu, np.sqrt(var), best)


def expected_improvement(model: GPModel, p: SearchPoint, best: float) -> float:
    return float(ei_batch(model, p.log_coords[None, :], best)[0])
