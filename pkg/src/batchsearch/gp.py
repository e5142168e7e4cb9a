"""Exact Gaussian process regression with an RBF kernel.

The posterior mean is conditioned on labelled training points.  The
posterior variance is tracked by a separate conditioning set so that a
batch selector can shrink uncertainty at pending (still unlabelled)
picks without touching the mean: ``refit_sigma`` grows that set.

Cost is cubic in the conditioning set size; no sparse approximations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import ConfigError, GPNumericalError

_JITTER_BASE = 1e-10
_JITTER_DOUBLINGS = 3


@dataclass(frozen=True)
class GPConfig:
    """RBF kernel hyperparameters plus the UCB schedule.

    ``beta`` weights the sigma bonus in mu + sigma * sqrt(beta);
    ``refit_interval`` is how many picks go between variance refits.
    """

    length_scale: float = 1.0
    signal_variance: float = 1.0
    noise_variance: float = 1e-4
    beta: float = 1.0
    refit_interval: int = 5

    def validate(self) -> None:
        if self.length_scale <= 0:
            raise ConfigError("length_scale must be positive")
        if self.signal_variance <= 0:
            raise ConfigError("signal_variance must be positive")
        if self.noise_variance < 0:
            raise ConfigError("noise_variance cannot be negative")
        if self.beta < 0:
            raise ConfigError("beta cannot be negative")
        if self.refit_interval < 1:
            raise ConfigError("refit_interval must be >= 1")


def rbf_kernel(a: np.ndarray, b: np.ndarray, cfg: GPConfig) -> np.ndarray:
    """Gram matrix k(a_i, b_j) = sv * exp(-|a_i - b_j|^2 / (2 ls^2))."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    d2 = (
        (a**2).sum(axis=1)[:, None]
        - 2.0 * a @ b.T
        + (b**2).sum(axis=1)[None, :]
    )
    d2 = np.maximum(d2, 0.0)
    return cfg.signal_variance * np.exp(-d2 / (2.0 * cfg.length_scale**2))


def _chol_with_jitter(gram: np.ndarray, noise: float) -> np.ndarray:
    """Lower Cholesky of gram + noise*I, escalating jitter on failure."""
    n = gram.shape[0]
    eye = np.eye(n)
    jitter = 0.0
    for attempt in range(_JITTER_DOUBLINGS + 2):
        try:
            return cholesky(gram + (noise + jitter) * eye, lower=True)
        except np.linalg.LinAlgError:
            jitter = _JITTER_BASE if jitter == 0.0 else 2.0 * jitter
    raise GPNumericalError(
        "SINGULAR_KERNEL",
        f"kernel matrix not positive definite after jitter up to {jitter / 2.0:g}",
    )


@dataclass(frozen=True)
class GPModel:
    """Fitted GP: mean conditioned on labels, sigma on its own input set."""

    cfg: GPConfig
    x_mean: np.ndarray       # (n, d) labelled inputs
    y_mean_offset: float     # training-label mean, added back to predictions
    alpha: np.ndarray        # (n,) K^-1 (y - offset)
    x_sigma: np.ndarray      # (m, d) variance conditioning set
    chol_sigma: np.ndarray   # (m, m) lower Cholesky for the sigma set

    @property
    def n_train(self) -> int:
        return self.x_mean.shape[0]


def fit_gp(x: np.ndarray, y: np.ndarray, cfg: GPConfig | None = None) -> GPModel:
    """Condition mean and sigma on labelled inputs ``x`` with targets ``y``."""
    cfg = cfg or GPConfig()
    cfg.validate()
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise GPNumericalError("SHAPE_MISMATCH", "need at least one training point")
    if y.shape[0] != x.shape[0]:
        raise GPNumericalError(
            "SHAPE_MISMATCH",
            f"{x.shape[0]} inputs but {y.shape[0]} targets",
        )
    gram = rbf_kernel(x, x, cfg)
    chol = _chol_with_jitter(gram, cfg.noise_variance)
    offset = float(y.mean())
    z = solve_triangular(chol, y - offset, lower=True)
    alpha = solve_triangular(chol.T, z, lower=False)
    return GPModel(
        cfg=cfg,
        x_mean=x,
        y_mean_offset=offset,
        alpha=alpha,
        x_sigma=x,
        chol_sigma=chol,
    )


def _check_query(model: GPModel, x: np.ndarray) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    scalar_input = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != model.x_mean.shape[1]:
        raise GPNumericalError(
            "SHAPE_MISMATCH",
            f"query dim {arr.shape[1]} != train dim {model.x_mean.shape[1]}",
        )
    return arr, scalar_input


def gp_predict(
    model: GPModel, x: np.ndarray
) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Posterior mean and sd at query points.

    Accepts one point (d,) returning scalars, or a stack (q, d) returning
    arrays.  Batch and pointwise calls agree exactly: a stacked query is
    evaluated by the same linear algebra as each point alone.
    """
    q, scalar_input = _check_query(model, x)
    k_mean = rbf_kernel(model.x_mean, q, model.cfg)
    mu = model.y_mean_offset + k_mean.T @ model.alpha
    k_sigma = rbf_kernel(model.x_sigma, q, model.cfg)
    v = solve_triangular(model.chol_sigma, k_sigma, lower=True)
    var = np.maximum(model.cfg.signal_variance - (v**2).sum(axis=0), 0.0)
    sigma = np.sqrt(var)
    if scalar_input:
        return float(mu[0]), float(sigma[0])
    return mu, sigma


def refit_sigma(model: GPModel, new_inputs: np.ndarray) -> GPModel:
    """Add pending inputs to the sigma conditioning set; mean is untouched."""
    arr = np.asarray(new_inputs, dtype=np.float64)
    if arr.size == 0:
        return model
    arr, _ = _check_query(model, arr)
    x_sigma = np.vstack([model.x_sigma, arr])
    gram = rbf_kernel(x_sigma, x_sigma, model.cfg)
    chol = _chol_with_jitter(gram, model.cfg.noise_variance)
    return GPModel(
        cfg=model.cfg,
        x_mean=model.x_mean,
        y_mean_offset=model.y_mean_offset,
        alpha=model.alpha,
        x_sigma=x_sigma,
        chol_sigma=chol,
    )
