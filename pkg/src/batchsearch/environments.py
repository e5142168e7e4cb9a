"""Environment construction: synthetic cluster pools and dataset-backed pools.

The synthetic generator draws N clusters of DNA sequences.  Each cluster
gets a label mean mu ~ U(-1/2, 1/2), a label spread x ~ sigma * U(0, 1),
and per-position base distributions v_1..v_l obtained by pushing four
standard-normal draws through |.|^(1/c) and normalizing.  Sequences are
sampled i.i.d. from the product of the v_j; labels are sigmoid(y) with
y ~ Normal(mu, sd=x), so every label lands strictly inside (0, 1).
Small c makes the per-position distributions extremely peaked, which
yields tight, well-separated sequence clusters (and many duplicate
draws; duplicates collapse to one pool entry).

Dataset-backed environments come from a CSV with header
``sequence,score[,strand]``; raw scores can be rank-normalized onto a
uniform [0, 1] grid.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .core import DNA, PROTEIN, Alphabet, Environment, SequencePool, dedupe_sequences, validate_environment
from .errors import DatasetParseError, EnvironmentInvalid

_ALPHABETS = {"dna": DNA, "protein": PROTEIN}


@dataclass(frozen=True)
class ClusterEnvConfig:
    """Parameters of the synthetic cluster generator."""

    n_clusters: int
    per_cluster: int
    sigma: float = 0.1
    concentration: float = 0.2
    length: int = 100
    seed: int = 0
    batch_size: int = 100

    def validate(self) -> "ClusterEnvConfig":
        if self.n_clusters < 1 or self.per_cluster < 1 or self.length < 1:
            raise EnvironmentInvalid("CONFIG_INVALID", "counts and length must be >= 1")
        if self.sigma <= 0 or self.concentration <= 0:
            raise EnvironmentInvalid("CONFIG_INVALID", "sigma and concentration must be > 0")
        if self.batch_size < 1:
            raise EnvironmentInvalid("CONFIG_INVALID", "batch_size must be >= 1")
        return self


@dataclass
class ClusterGroundTruth:
    """Recorded generator state: per-cluster label law and base distributions.

    ``cluster_of`` maps each (deduplicated) pool index to the cluster that
    first produced it, so cluster sizes may differ from ``per_cluster``.
    """

    means: np.ndarray            # (N,) label mean mu per cluster
    spreads: np.ndarray          # (N,) label sd x per cluster, in (0, sigma)
    base_dists: np.ndarray       # (N, length, 4) per-position distributions
    cluster_of: np.ndarray       # (pool size,) cluster id per pool index

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.cluster_of == cluster)


def sample_position_distribution(c: float, rng: np.random.Generator) -> np.ndarray:
    """One per-position base distribution: normalize |N(0,1)| draws to power 1/c.

    Small c concentrates mass on the largest draw; c -> infinity flattens
    toward uniform.  An all-zero draw (probability zero, guarded for
    determinism) is resampled.
    """
    if c <= 0:
        raise EnvironmentInvalid("CONFIG_INVALID", "concentration must be > 0")
    while True:
        x = np.abs(rng.standard_normal(4))
        if x.max() > 0.0:
            break
    v = x ** (1.0 / c)
    return v / v.sum()


def _sigmoid(y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    pos = y >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-y[pos]))
    ey = np.exp(y[~pos])
    out[~pos] = ey / (1.0 + ey)
    return out


def generate_cluster_env(cfg: ClusterEnvConfig) -> tuple[Environment, ClusterGroundTruth]:
    """Generate a synthetic environment; pure function of the config (incl. seed).

    Duplicate draws collapse to one pool entry, so the pool can be smaller
    than n_clusters * per_cluster; batch_size is clamped to the pool size.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    N, n, ell = cfg.n_clusters, cfg.per_cluster, cfg.length

    means = np.empty(N)
    spreads = np.empty(N)
    base_dists = np.empty((N, ell, 4))
    tokens = np.empty((N * n, ell), dtype=np.uint8)
    labels = np.empty(N * n)
    cluster_src = np.repeat(np.arange(N), n)

    for i in range(N):
        means[i] = rng.uniform(-0.5, 0.5)
        spreads[i] = cfg.sigma * rng.uniform(0.0, 1.0)
        for j in range(ell):
            base_dists[i, j] = sample_position_distribution(cfg.concentration, rng)
        # sample n sequences from the product distribution, position-wise;
        # clip guards the probability-zero case u >= cum[-1] under fp rounding
        cum = np.cumsum(base_dists[i], axis=1)
        u = rng.random((n, ell))
        draws = (u[:, :, None] > cum[None, :, :]).sum(axis=2)
        tokens[i * n : (i + 1) * n] = np.minimum(draws, 3)
        y = rng.normal(means[i], spreads[i], size=n)
        labels[i * n : (i + 1) * n] = _sigmoid(y)

    # dedup keeping the first occurrence (pool is a set)
    seqs = ["".join(DNA.symbols[t] for t in row) for row in tokens]
    keep, _ = dedupe_sequences(seqs)
    keep_arr = np.asarray(keep, dtype=np.int64)
    pool = SequencePool(tokens[keep_arr], DNA)
    env = Environment(pool, labels[keep_arr], min(cfg.batch_size, len(keep_arr)))
    truth = ClusterGroundTruth(means, spreads, base_dists, cluster_src[keep_arr])
    return env, truth


def rank_normalize(scores) -> np.ndarray:
    """Map scores to their rank grid r/(n-1): order-preserving, uniform on [0, 1].

    Ties take ranks in stable input order (first occurrence ranks lower);
    a single score maps to 0.5.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if n == 0:
        raise EnvironmentInvalid("EMPTY_POOL", "scores must be nonempty")
    if n == 1:
        return np.array([0.5])
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    return ranks / (n - 1)


def load_dataset_env(
    path: str | Path,
    batch_size: int,
    normalize: bool = True,
    alphabet: Alphabet = DNA,
) -> Environment:
    """Environment from a ``sequence,score[,strand]`` CSV.

    With ``normalize`` the scores are rank-normalized to a uniform [0, 1]
    grid; otherwise they must already be valid labels.
    """
    path = Path(path)
    sequences: list[str] = []
    scores: list[float] = []
    strands: list[str] = []
    has_strand = False
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetParseError(f"{path}: empty file", row=0)
        cols = [h.strip().lower() for h in header]
        if cols[:2] != ["sequence", "score"]:
            raise DatasetParseError(
                f"{path}: expected header 'sequence,score[,strand]', got {header}", row=1
            )
        has_strand = len(cols) > 2 and cols[2] == "strand"
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2 or (has_strand and len(row) < 3):
                raise DatasetParseError(f"{path}: row {lineno}: too few columns", row=lineno)
            sequences.append(row[0].strip())
            try:
                scores.append(float(row[1]))
            except ValueError:
                raise DatasetParseError(
                    f"{path}: row {lineno}: bad score {row[1]!r}", row=lineno
                )
            if has_strand:
                strand = row[2].strip()
                if strand not in ("+", "-"):
                    raise DatasetParseError(
                        f"{path}: row {lineno}: bad strand {strand!r}", row=lineno
                    )
                strands.append(strand)
    if not sequences:
        raise DatasetParseError(f"{path}: no data rows", row=1)
    raw = np.asarray(scores, dtype=np.float64)
    if normalize:
        labels = rank_normalize(raw)
    else:
        if raw.min() < 0.0 or raw.max() > 1.0:
            raise EnvironmentInvalid(
                "LABEL_RANGE", f"{path}: raw labels outside [0, 1]; pass normalize=True"
            )
        labels = raw
    return validate_environment(
        sequences, labels, batch_size, alphabet=alphabet, strands=strands if has_strand else None
    )


def save_env_json(
    path: str | Path,
    env: Environment,
    truth: ClusterGroundTruth | None = None,
    config: ClusterEnvConfig | None = None,
) -> None:
    """Serialize (pool, labels, ground truth, config) so runs can share one environment."""
    pool = env.pool
    alph_name = next((k for k, v in _ALPHABETS.items() if v == pool.alphabet), None)
    doc = {
        "format": "batchsearch-env-v1",
        "alphabet": alph_name if alph_name else pool.alphabet.symbols,
        "batch_size": env.batch_size,
        "sequences": [pool.sequence(i) for i in range(len(pool))],
        "labels": env.all_labels().tolist(),
    }
    if pool.strands is not None:
        doc["strands"] = ["+-"[int(s)] for s in pool.strands]
    if config is not None:
        doc["config"] = asdict(config)
    if truth is not None:
        doc["ground_truth"] = {
            "means": truth.means.tolist(),
            "spreads": truth.spreads.tolist(),
            "base_dists": truth.base_dists.tolist(),
            "cluster_of": truth.cluster_of.tolist(),
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_env_json(path: str | Path) -> tuple[Environment, ClusterGroundTruth | None]:
    """Load an environment (and ground truth, when present) saved by save_env_json."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise DatasetParseError(f"{path}: invalid JSON: {e}", row=e.lineno)
    if doc.get("format") != "batchsearch-env-v1":
        raise DatasetParseError(f"{path}: not a batchsearch environment file")
    alph = _ALPHABETS.get(doc["alphabet"], None) or Alphabet(doc["alphabet"])
    env = validate_environment(
        doc["sequences"],
        np.asarray(doc["labels"], dtype=np.float64),
        doc["batch_size"],
        alphabet=alph,
        strands=doc.get("strands"),
    )
    truth = None
    if "ground_truth" in doc:
        gt = doc["ground_truth"]
        truth = ClusterGroundTruth(
            np.asarray(gt["means"]),
            np.asarray(gt["spreads"]),
            np.asarray(gt["base_dists"]),
            np.asarray(gt["cluster_of"], dtype=np.int64),
        )
    return env, truth
