"""Normal-gamma posteriors over per-cluster label quality, and Thompson draws.

Each cluster's labels are modelled as normal with unknown mean and
precision under a conjugate normal-gamma prior, so the posterior is
available in closed form from sufficient statistics.  A Thompson draw
samples a precision from the gamma marginal and then a mean from the
conditional normal; the precision can be drawn once and reused across
several draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class NormalGammaPrior:
    """Prior over a cluster's (mean, precision).

    ``mu0`` is the prior mean, ``n0`` the pseudo-count behind it, and
    ``alpha``/``beta`` the gamma shape/rate over the precision.
    """

    mu0: float = 0.5
    n0: float = 10.0
    alpha: float = 1.0
    beta: float = 1.0

    def validate(self) -> None:
        if self.n0 <= 0:
            raise ConfigError("prior pseudo-count n0 must be positive")
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError("gamma prior needs alpha > 0 and beta > 0")


@dataclass(frozen=True)
class NormalGammaPosterior:
    """Closed-form posterior after observing ``count`` samples.

    ``precision_weight`` is count + n0: the conditional normal over the
    mean has sd 1 / sqrt(precision_weight * tau) given precision tau.
    """

    gamma_shape: float
    gamma_rate: float
    normal_mean: float
    count: int
    precision_weight: float


def posterior_params(
    prior: NormalGammaPrior, samples: np.ndarray
) -> NormalGammaPosterior:
    """Update the prior with observed samples (empty array returns the prior)."""
    prior.validate()
    x = np.asarray(samples, dtype=np.float64).ravel()
    m = x.shape[0]
    if m == 0:
        return NormalGammaPosterior(
            gamma_shape=prior.alpha,
            gamma_rate=prior.beta,
            normal_mean=prior.mu0,
            count=0,
            precision_weight=prior.n0,
        )
    mean = float(x.mean())
    sq_dev = float(((x - mean) ** 2).sum())
    shape = prior.alpha + m / 2.0
    rate = (
        prior.beta
        + 0.5 * sq_dev
        + (m * prior.n0 * (mean - prior.mu0) ** 2) / (2.0 * (m + prior.n0))
    )
    post_mean = (m * mean + prior.n0 * prior.mu0) / (m + prior.n0)
    return NormalGammaPosterior(
        gamma_shape=shape,
        gamma_rate=rate,
        normal_mean=post_mean,
        count=m,
        precision_weight=m + prior.n0,
    )


def draw_precision(post: NormalGammaPosterior, rng: np.random.Generator) -> float:
    """Sample tau from the gamma marginal, resampling a zero underflow."""
    scale = 1.0 / post.gamma_rate
    tau = float(rng.gamma(post.gamma_shape, scale))
    while tau <= 0.0:
        tau = float(rng.gamma(post.gamma_shape, scale))
    return tau


def sample_cluster_value(
    post: NormalGammaPosterior,
    rng: np.random.Generator,
    precision: float | None = None,
) -> float:
    """One Thompson draw of the cluster mean.

    When ``precision`` is given it is used directly instead of drawing a
    fresh tau (the caching contract for within-act reuse).
    """
    tau = draw_precision(post, rng) if precision is None else precision
    sd = 1.0 / math.sqrt(post.precision_weight * tau)
    return float(rng.normal(post.normal_mean, sd))


def thompson_select(
    posteriors: list[NormalGammaPosterior],
    rng: np.random.Generator,
    precisions: list[float] | None = None,
    among: np.ndarray | None = None,
) -> int:
    """Index of the posterior with the largest sampled value.

    Draws one value per eligible posterior, in index order, so the rng
    consumption is reproducible.  ``among`` restricts the draw to a
    boolean-masked subset (exhausted clusters are skipped entirely);
    ties break toward the lowest index.
    """
    if not posteriors:
        raise ConfigError("need at least one posterior to select from")
    best = -1
    best_q = -math.inf
    for i, post in enumerate(posteriors):
        if among is not None and not among[i]:
            continue
        tau = precisions[i] if precisions is not None else None
        q = sample_cluster_value(post, rng, tau)
        if q > best_q:
            best_q = q
            best = i
    if best < 0:
        raise ConfigError("selection mask excludes every posterior")
    return best
