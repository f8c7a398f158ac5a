"""
Gaussian-process regression: exact posterior, leave-one-out predictions and
marginal-likelihood hyperparameter search
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.optimize import minimize

from config.settings import TunerSettings, get_tuner_settings

from ..errors import InsufficientDataError, ModelFitError, SpaceError
from ..models.space_models import EncodedVector, EncodingLayout
from .kernels import Kernel, KernelFamily, kernel_diag, kernel_for_layout, kernel_matrix

# Setup logging
logger = logging.getLogger(__name__)

# log-space search bounds for hyperparameters (standardized targets, unit-scaled inputs)
_LOG_SIGNAL_BOUNDS = (np.log(1e-2), np.log(1e2))
_LOG_LENGTH_BOUNDS = (np.log(1e-2), np.log(1e2))
_LOG_NOISE_BOUNDS = (np.log(1e-6), np.log(1.0))
_FAILED_OBJECTIVE = 1e25


@dataclass(frozen=True)
class GPModel:
    """Fitted GP posterior; immutable and safe to share across threads."""

    kernel: Kernel
    noise: float
    X: np.ndarray
    y: np.ndarray            # standardized targets
    y_mean: float
    y_scale: float
    chol: Optional[np.ndarray]   # lower Cholesky factor of K + (σ² + jitter)I
    alpha: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def width(self) -> int:
        return self.X.shape[1]


def _standardize(y: np.ndarray) -> Tuple[np.ndarray, float, float]:
    if len(y) == 0:
        return y, 0.0, 1.0
    mean = float(np.mean(y))
    scale = float(np.std(y))
    if not np.isfinite(scale) or scale <= 0:
        scale = 1.0
    return (y - mean) / scale, mean, scale


def _factorize(K: np.ndarray, noise: float, ladder: Sequence[float]) -> Tuple[np.ndarray, float]:
    """Cholesky of K + σ²I, escalating jitter (relative to the mean diagonal) on failure."""
    n = K.shape[0]
    base = K + noise * np.eye(n)
    diag_scale = max(float(np.mean(np.diag(K))), 1e-12)
    for jitter in [0.0, *ladder]:
        try:
            L = np.linalg.cholesky(base + jitter * diag_scale * np.eye(n))
            return L, jitter * diag_scale
        except np.linalg.LinAlgError:
            continue
    raise ModelFitError(f"covariance matrix of {n} points is not positive definite after jitter {ladder[-1]}")


def gp_fit(
    X: np.ndarray,
    y: np.ndarray,
    kernel: Kernel,
    noise: float,
    settings: Optional[TunerSettings] = None,
) -> GPModel:
    """Condition a GP on (X, y); targets are standardized internally"""
    settings = settings or get_tuner_settings()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) == 0:
        X = X.reshape(0, X.shape[1] if X.size else len(kernel.active_columns()))
    if X.shape[0] != len(y):
        raise ModelFitError(f"{X.shape[0]} inputs but {len(y)} targets")
    if noise < 0:
        raise ModelFitError(f"noise must be non-negative, got {noise}")
    if not np.all(np.isfinite(y)):
        raise ModelFitError("targets contain non-finite values")

    y_std, y_mean, y_scale = _standardize(y)
    if len(y) == 0:
        return GPModel(kernel, float(noise), X, y_std, y_mean, y_scale, None, np.zeros(0))

    K = kernel_matrix(kernel, X, X)
    K = 0.5 * (K + K.T)
    L, jitter = _factorize(K, noise, settings.jitter_ladder)
    alpha = linalg.cho_solve((L, True), y_std)
    if jitter > 0:
        logger.debug(f"GP factorization needed jitter {jitter:.2e} on {len(y)} points")
    return GPModel(kernel, float(noise), X, y_std, y_mean, y_scale, L, alpha, jitter)


def gp_predict_batch(m: GPModel, Q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent variance at each row of Q"""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[1] != m.width:
        raise SpaceError(f"query has {Q.shape[1]} columns, model expects {m.width}")
    prior = kernel_diag(m.kernel, Q)
    if m.n == 0:
        return np.full(Q.shape[0], m.y_mean), prior * m.y_scale ** 2

    k_star = kernel_matrix(m.kernel, m.X, Q)
    mean_std = k_star.T @ m.alpha
    v = linalg.solve_triangular(m.chol, k_star, lower=True)
    var_std = np.maximum(prior - np.sum(v * v, axis=0), 0.0)
    return m.y_mean + m.y_scale * mean_std, var_std * m.y_scale ** 2


def gp_predict(m: GPModel, q: Union[EncodedVector, np.ndarray]) -> Tuple[float, float]:
    """Posterior mean and variance at a single encoded point"""
    coords = q.coords if isinstance(q, EncodedVector) else np.asarray(q, dtype=float).ravel()
    mean, var = gp_predict_batch(m, coords[None, :])
    return float(mean[0]), float(var[0])


def gp_loo(m: GPModel) -> Tuple[np.ndarray, np.ndarray]:
    """Closed-form leave-one-out predictive means and variances of the training points"""
    if m.n < 2:
        raise InsufficientDataError("leave-one-out needs at least 2 training points")
    K_inv = linalg.cho_solve((m.chol, True), np.eye(m.n))
    d = np.diag(K_inv)
    mean_std = m.y - m.alpha / d
    return m.y_mean + m.y_scale * mean_std, (1.0 / d) * m.y_scale ** 2


def log_marginal_likelihood(X: np.ndarray, y_std: np.ndarray, kernel: Kernel, noise: float) -> float:
    """log p(y | X) of standardized targets; raises ModelFitError when K + σ²I is not PD."""
    K = kernel_matrix(kernel, X, X)
    K = 0.5 * (K + K.T) + noise * np.eye(len(y_std))
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as e:
        raise ModelFitError("covariance not positive definite") from e
    alpha = linalg.cho_solve((L, True), y_std)
    return float(
        -0.5 * y_std @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * len(y_std) * np.log(2.0 * np.pi)
    )


def _unpack(theta: np.ndarray, template: Kernel) -> Tuple[Kernel, float]:
    groups = template.n_lengthscale_groups
    kernel = template.with_params(np.exp(theta[0]), np.exp(theta[1:1 + groups]))
    return kernel, float(np.exp(theta[1 + groups]))


def gp_fit_hypers(
    X: np.ndarray,
    y: np.ndarray,
    family: Union[KernelFamily, Kernel],
    layout: Optional[EncodingLayout] = None,
    seed: int = 0,
    settings: Optional[TunerSettings] = None,
) -> Tuple[Kernel, float]:
    """
    Maximize the log marginal likelihood over log signal variance, one
    log-lengthscale per kernel component and log noise.

    Lengthscales are isotropic within a component: every column the
    component covers shares one lengthscale, so a mixed kernel fits one for
    the numeric block and one for the categorical block. Per-dimension (ARD)
    lengthscales are not searched.

    Runs `hyper_restarts` bounded Powell searches (first from the template
    defaults, the rest from seeded uniform draws) and keeps the best.
    """
    settings = settings or get_tuner_settings()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if len(y) < 2:
        raise InsufficientDataError(f"hyperparameter search needs at least 2 points, got {len(y)}")

    if isinstance(family, Kernel):
        template = family
    else:
        if layout is None:
            raise ModelFitError("a kernel family needs an encoding layout")
        template = kernel_for_layout(family, layout)
    y_std, _, _ = _standardize(y)

    groups = template.n_lengthscale_groups
    bounds = [_LOG_SIGNAL_BOUNDS] + [_LOG_LENGTH_BOUNDS] * groups + [_LOG_NOISE_BOUNDS]
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])

    def objective(theta: np.ndarray) -> float:
        kernel, noise = _unpack(np.clip(theta, lower, upper), template)
        try:
            value = -log_marginal_likelihood(X, y_std, kernel, noise)
        except ModelFitError:
            return _FAILED_OBJECTIVE
        return value if np.isfinite(value) else _FAILED_OBJECTIVE

    rng = np.random.default_rng(seed)
    starts = [np.array([0.0] + [np.log(0.5)] * groups + [np.log(1e-3)])]
    starts += [rng.uniform(lower, upper) for _ in range(settings.hyper_restarts - 1)]

    best_theta, best_value = None, _FAILED_OBJECTIVE
    for x0 in starts:
        result = minimize(
            objective,
            x0,
            method="Powell",
            bounds=bounds,
            options={"maxfev": settings.hyper_max_evals, "xtol": 1e-3, "ftol": 1e-6},
        )
        if np.isfinite(result.fun) and result.fun < best_value:
            best_theta, best_value = np.clip(result.x, lower, upper), float(result.fun)

    if best_theta is None:
        logger.warning("All hyperparameter restarts failed conditioning; using unit lengthscales")
        return template.with_params(1.0, [1.0] * groups), float(settings.jitter_ladder[-1])

    kernel, noise = _unpack(best_theta, template)
    logger.debug(f"GP hypers: signal={np.exp(best_theta[0]):.3g} "
                 f"lengths={np.exp(best_theta[1:1 + groups]).round(4).tolist()} noise={noise:.3g}")
    return kernel, noise


def gp_posterior_samples(
    m: GPModel,
    Q: np.ndarray,
    rng: np.random.Generator,
    n_samples: int = 1,
    settings: Optional[TunerSettings] = None,
) -> np.ndarray:
    """Joint posterior draws of the latent function at the rows of Q, shape (n_samples, len(Q))"""
    settings = settings or get_tuner_settings()
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    mean, var = gp_predict_batch(m, Q)
    cov = kernel_matrix(m.kernel, Q, Q)
    if m.n > 0:
        v = linalg.solve_triangular(m.chol, kernel_matrix(m.kernel, m.X, Q), lower=True)
        cov = cov - v.T @ v
    cov = 0.5 * (cov + cov.T) * m.y_scale ** 2
    z = rng.standard_normal((len(Q), n_samples))
    try:
        L, _ = _factorize(cov, 0.0, settings.jitter_ladder)
        draws = L @ z
    except ModelFitError:
        # independent marginals when the joint covariance is numerically singular
        draws = np.sqrt(var)[:, None] * z
    return (mean[:, None] + draws).T
