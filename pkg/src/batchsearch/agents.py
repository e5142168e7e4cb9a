"""Batch selection policies: greedy, epsilon-greedy, clustered Thompson, GP-UCB.

Every policy first fits (or is handed) a predictor over the observation
log, then picks a batch of unobserved pool indices.  Policies consume
the supplied rng in a fixed order, so a given (log, rng state) pair
always yields the same batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bandit import NormalGammaPrior, draw_precision, posterior_params, thompson_select
from .core import AgentInfo, ObservationLog, SequencePool
from .errors import ConfigError, SelectionError
from .gp import GPConfig, fit_gp, gp_predict, refit_sigma
from .kmeans import kmeans
from .surrogate import SurrogateConfig, SurrogateModel, fit_surrogate


class ArrayModel:
    """Predictor backed by fixed per-index arrays instead of a fitted net.

    Stands in for a surrogate wherever one is accepted: as an oracle
    (values = true labels) or as a test seam with hand-picked scores.
    """

    def __init__(self, values: np.ndarray, embeddings: np.ndarray | None = None):
        self.values = np.asarray(values, dtype=np.float64)
        self.embeddings = (
            None if embeddings is None else np.asarray(embeddings, dtype=np.float64)
        )

    def predict_pool(
        self, pool: SequencePool, indices: np.ndarray | None = None
    ) -> np.ndarray:
        if len(pool) != self.values.shape[0]:
            raise ConfigError(
                f"fixed values cover {self.values.shape[0]} sequences, pool has {len(pool)}"
            )
        return self.values if indices is None else self.values[indices]

    def embed_pool(
        self, pool: SequencePool, indices: np.ndarray | None = None
    ) -> np.ndarray:
        if self.embeddings is None:
            raise ConfigError("this fixed-array model carries no embeddings")
        return self.embeddings if indices is None else self.embeddings[indices]


Model = SurrogateModel | ArrayModel


def _resolve_model(
    pool: SequencePool,
    log: ObservationLog,
    cfg: SurrogateConfig,
    rng: np.random.Generator,
    model: Model | None,
) -> Model:
    if model is not None:
        return model
    return fit_surrogate(log, pool, cfg, rng)


def _greedy_order(predictions: np.ndarray) -> np.ndarray:
    """Indices by descending prediction; ties toward the lower index."""
    return np.argsort(-predictions, kind="stable")


def _take_greedy(
    order: np.ndarray, blocked: np.ndarray, count: int, start: int = 0
) -> tuple[list[int], int]:
    """Walk ``order`` from ``start`` collecting ``count`` unblocked indices."""
    picked: list[int] = []
    pos = start
    n = order.shape[0]
    while len(picked) < count and pos < n:
        idx = int(order[pos])
        pos += 1
        if not blocked[idx]:
            picked.append(idx)
    if len(picked) < count:
        raise SelectionError(
            "INSUFFICIENT_UNOBSERVED",
            f"needed {count} unobserved sequences, found {len(picked)}",
        )
    return picked, pos


def greedy_act(
    pool: SequencePool,
    log: ObservationLog,
    batch_size: int,
    rng: np.random.Generator,
    surrogate: SurrogateConfig | None = None,
    model: Model | None = None,
) -> np.ndarray:
    """Top-batch_size unobserved sequences by predicted label."""
    model = _resolve_model(pool, log, surrogate or SurrogateConfig(), rng, model)
    preds = model.predict_pool(pool)
    blocked = log.observed_mask(len(pool))
    picked, _ = _take_greedy(_greedy_order(preds), blocked, batch_size)
    return np.array(picked, dtype=np.int64)


def epsilon_greedy_act(
    pool: SequencePool,
    log: ObservationLog,
    batch_size: int,
    rng: np.random.Generator,
    epsilon: float,
    surrogate: SurrogateConfig | None = None,
    model: Model | None = None,
) -> np.ndarray:
    """ceil(eps * B) uniform-random picks, then a greedy fill.

    The random picks come first in the returned batch.  With epsilon 0
    this reduces exactly to ``greedy_act`` (no random draws consumed).
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigError(f"epsilon must lie in [0, 1], got {epsilon}")
    model = _resolve_model(pool, log, surrogate or SurrogateConfig(), rng, model)
    # the 1e-9 slack keeps e.g. 0.1 * 20 from ceiling to 3
    n_random = math.ceil(epsilon * batch_size - 1e-9)
    n_random = min(n_random, batch_size)

    blocked = log.observed_mask(len(pool))
    picked: list[int] = []
    if n_random > 0:
        unobserved = np.flatnonzero(~blocked)
        if unobserved.shape[0] < batch_size:
            raise SelectionError(
                "INSUFFICIENT_UNOBSERVED",
                f"needed {batch_size} unobserved sequences, found {unobserved.shape[0]}",
            )
        chosen = rng.choice(unobserved, size=n_random, replace=False)
        for idx in chosen:
            picked.append(int(idx))
            blocked[idx] = True

    preds = model.predict_pool(pool)
    rest, _ = _take_greedy(_greedy_order(preds), blocked, batch_size - n_random)
    return np.array(picked + rest, dtype=np.int64)


@dataclass(frozen=True)
class HBBSConfig:
    """Hierarchical batch bandit search parameters.

    ``k`` clusters in embedding space; one normal-gamma posterior per
    cluster; ``resample_tau`` switches the per-act precision cache off
    so tau is redrawn at every Thompson step.
    """

    k: int = 10
    prior: NormalGammaPrior = field(default_factory=NormalGammaPrior)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    resample_tau: bool = False

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        self.prior.validate()
        self.surrogate.validate()


def hbbs_act(
    pool: SequencePool,
    log: ObservationLog,
    batch_size: int,
    rng: np.random.Generator,
    cfg: HBBSConfig,
    model: Model | None = None,
) -> np.ndarray:
    """Thompson-sample a cluster, then take its best unobserved sequence.

    Clusters come from k-means over the model's embeddings of the whole
    pool; each cluster's posterior is built from the observed labels
    falling in it.  A draw landing on an exhausted cluster is repeated
    over the clusters that still have unobserved members.
    """
    cfg.validate()
    model = _resolve_model(pool, log, cfg.surrogate, rng, model)
    n = len(pool)
    blocked = log.observed_mask(n)
    n_unobserved = int((~blocked).sum())
    if n_unobserved < batch_size:
        raise SelectionError(
            "INSUFFICIENT_UNOBSERVED",
            f"needed {batch_size} unobserved sequences, found {n_unobserved}",
        )

    embeddings = model.embed_pool(pool)
    partition = kmeans(embeddings, cfg.k, rng)
    k = partition.k
    assignment = partition.assignment

    posteriors = []
    observed_clusters = assignment[log.indices]
    for j in range(k):
        samples = log.labels[observed_clusters == j]
        posteriors.append(posterior_params(cfg.prior, samples))

    preds = model.predict_pool(pool)
    order = _greedy_order(preds)
    cluster_order = [order[assignment[order] == j] for j in range(k)]
    cursor = [0] * k
    available = np.bincount(assignment[~blocked], minlength=k)

    taus = None
    if not cfg.resample_tau:
        taus = [draw_precision(p, rng) for p in posteriors]
    batch: list[int] = []
    for _ in range(batch_size):
        step_taus = (
            taus if taus is not None else [draw_precision(p, rng) for p in posteriors]
        )
        chosen = thompson_select(posteriors, rng, precisions=step_taus)
        if available[chosen] == 0:
            chosen = thompson_select(
                posteriors, rng, precisions=step_taus, among=available > 0
            )
        picked, cursor[chosen] = _take_greedy(
            cluster_order[chosen], blocked, 1, cursor[chosen]
        )
        blocked[picked[0]] = True
        available[chosen] -= 1
        batch.append(picked[0])
    return np.array(batch, dtype=np.int64)


@dataclass(frozen=True)
class GPUCBConfig:
    """Batch GP-UCB parameters; the UCB weight and refit cadence live on gp."""

    gp: GPConfig = field(default_factory=GPConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)

    @property
    def beta(self) -> float:
        return self.gp.beta

    @property
    def refit_interval(self) -> int:
        return self.gp.refit_interval

    def validate(self) -> None:
        self.gp.validate()
        self.surrogate.validate()


def gpucb_act(
    pool: SequencePool,
    log: ObservationLog,
    batch_size: int,
    rng: np.random.Generator,
    cfg: GPUCBConfig,
    model: Model | None = None,
) -> np.ndarray:
    """Pick argmax of mu + sigma * sqrt(beta) over a GP in embedding space.

    The mean stays fixed within an act; sigma is reconditioned on the
    observed set plus the pending picks after every ``refit_interval``
    selections, which is what spreads the batch out.
    """
    cfg.validate()
    model = _resolve_model(pool, log, cfg.surrogate, rng, model)
    n = len(pool)
    blocked = log.observed_mask(n)
    if int((~blocked).sum()) < batch_size:
        raise SelectionError(
            "INSUFFICIENT_UNOBSERVED",
            f"needed {batch_size} unobserved sequences, found {int((~blocked).sum())}",
        )

    embeddings = model.embed_pool(pool)
    base_gp = fit_gp(embeddings[log.indices], log.labels, cfg.gp)
    mu, sigma = gp_predict(base_gp, embeddings)
    root_beta = math.sqrt(cfg.beta)

    batch: list[int] = []
    scores = mu + root_beta * sigma
    scores[blocked] = -np.inf
    for i in range(1, batch_size + 1):
        idx = int(np.argmax(scores))  # ties: lowest index
        batch.append(idx)
        scores[idx] = -np.inf
        blocked[idx] = True
        if i % cfg.refit_interval == 0 and i < batch_size:
            widened = refit_sigma(base_gp, embeddings[np.array(batch)])
            _, sigma = gp_predict(widened, embeddings)
            scores = mu + root_beta * sigma
            scores[blocked] = -np.inf
    return np.array(batch, dtype=np.int64)


class GreedyAgent:
    """Pure exploitation: always the predicted top of the unobserved pool."""

    name = "greedy"

    def __init__(
        self,
        surrogate: SurrogateConfig | None = None,
        model: Model | None = None,
    ):
        self.surrogate = surrogate or SurrogateConfig()
        self.model = model
        self.info = AgentInfo(self.name, {})

    def act(
        self,
        pool: SequencePool,
        log: ObservationLog,
        batch_size: int,
        rng: np.random.Generator,
    ) -> np.ndarray:
        return greedy_act(pool, log, batch_size, rng, self.surrogate, self.model)


class EpsilonGreedyAgent:
    name = "eps-greedy"

    def __init__(
        self,
        epsilon: float,
        surrogate: SurrogateConfig | None = None,
        model: Model | None = None,
    ):
        self.epsilon = epsilon
        self.surrogate = surrogate or SurrogateConfig()
        self.model = model
        self.info = AgentInfo(self.name, {"epsilon": epsilon})

    def act(self, pool, log, batch_size, rng) -> np.ndarray:
        return epsilon_greedy_act(
            pool, log, batch_size, rng, self.epsilon, self.surrogate, self.model
        )


class HBBSAgent:
    name = "hbbs"

    def __init__(self, cfg: HBBSConfig | None = None, model: Model | None = None):
        self.cfg = cfg or HBBSConfig()
        self.model = model
        self.info = AgentInfo(self.name, {"k": self.cfg.k})

    def act(self, pool, log, batch_size, rng) -> np.ndarray:
        return hbbs_act(pool, log, batch_size, rng, self.cfg, self.model)


class GPUCBAgent:
    name = "gp-ucb"

    def __init__(self, cfg: GPUCBConfig | None = None, model: Model | None = None):
        self.cfg = cfg or GPUCBConfig()
        self.model = model
        self.info = AgentInfo(
            self.name, {"beta": self.cfg.beta, "m": self.cfg.refit_interval}
        )

    def act(self, pool, log, batch_size, rng) -> np.ndarray:
        return gpucb_act(pool, log, batch_size, rng, self.cfg, self.model)


class OracleAgent:
    """Greedy over the true labels; the zero-regret reference policy."""

    name = "oracle"

    def __init__(self, labels: np.ndarray):
        self.model = ArrayModel(labels)
        self.info = AgentInfo(self.name, {})

    def act(self, pool, log, batch_size, rng) -> np.ndarray:
        return greedy_act(pool, log, batch_size, rng, model=self.model)
