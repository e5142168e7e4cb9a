"""k-means clustering under the squared-l2 metric, with k-means++ seeding.

Deterministic given the randomness stream: nearest-centroid ties break
toward the lowest cluster id, empty clusters are repaired by moving the
point currently farthest from its centroid, and the per-iteration inertia
trace is recorded (it never increases).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ClusterPartition:
    """Assignment of points to k clusters plus the fitted centroids.

    ``k`` is the effective cluster count: when the requested k exceeds the
    number of distinct points, every distinct point becomes its own
    cluster and ``k_reduced`` reports the adjustment.
    """

    k: int
    requested_k: int
    assignment: np.ndarray        # (n,) cluster id per point
    centroids: np.ndarray         # (k, d)
    inertia: float
    inertia_trace: list[float] = field(default_factory=list)
    n_iter: int = 0
    k_reduced: bool = False


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared distances; clipped at 0 against round-off."""
    d2 = (
        (points**2).sum(axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + (centroids**2).sum(axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _plus_plus_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ initial centroids: first uniform, rest proportional to D^2."""
    n, d = points.shape
    centroids = np.empty((k, d))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[j] = points[rng.integers(n)]
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        idx = min(idx, n - 1)
        centroids[j] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator | int | None = None,
    max_iters: int = 300,
    init_centroids: np.ndarray | None = None,
    n_init: int = 1,
) -> ClusterPartition:
    """Lloyd iterations from k-means++ seeding to an assignment fixpoint.

    ``n_init`` independent seedings are run off the same rng and the
    lowest-inertia result wins (Lloyd only finds local optima; restarts
    are the standard hedge).  ``init_centroids`` overrides the seeding
    entirely (used by permutation-invariance tests).  With no rng a
    fixed seed of 0 is used.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a nonempty (n, d) array")
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(0 if rng is None else rng)
    n = points.shape[0]

    distinct = np.unique(points, axis=0)
    if k > distinct.shape[0]:
        # K_EXCEEDS_POINTS: every distinct point becomes its own cluster
        centroids = distinct
        assignment = np.argmin(_sq_dists(points, centroids), axis=1)
        return ClusterPartition(
            k=distinct.shape[0],
            requested_k=k,
            assignment=assignment,
            centroids=centroids,
            inertia=0.0,
            inertia_trace=[0.0],
            n_iter=0,
            k_reduced=True,
        )

    if init_centroids is not None:
        start = np.array(init_centroids, dtype=np.float64)
        return _lloyd(points, k, start, max_iters)
    best: ClusterPartition | None = None
    for _ in range(n_init):
        part = _lloyd(points, k, _plus_plus_seed(points, k, rng), max_iters)
        if best is None or part.inertia < best.inertia:
            best = part
    return best


def _lloyd(
    points: np.ndarray, k: int, centroids: np.ndarray, max_iters: int
) -> ClusterPartition:
    n = points.shape[0]
    assignment = np.full(n, -1, dtype=np.int64)
    trace: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        d2 = _sq_dists(points, centroids)
        new_assignment = np.argmin(d2, axis=1)  # ties: lowest cluster id
        dist_to_own = d2[np.arange(n), new_assignment]

        counts = np.bincount(new_assignment, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # move the globally farthest point into the empty cluster and
            # park the centroid on it, so inertia strictly decreases
            far = int(np.argmax(dist_to_own))
            counts[new_assignment[far]] -= 1
            new_assignment[far] = empty
            counts[empty] += 1
            centroids[empty] = points[far]
            dist_to_own[far] = 0.0

        converged = bool(np.array_equal(new_assignment, assignment))
        assignment = new_assignment
        for j in range(k):
            centroids[j] = points[assignment == j].mean(axis=0)
        d2_final = _sq_dists(points, centroids)
        trace.append(float(d2_final[np.arange(n), assignment].sum()))
        if converged:
            break

    return ClusterPartition(
        k=k,
        requested_k=k,
        assignment=assignment,
        centroids=centroids,
        inertia=trace[-1],
        inertia_trace=trace,
        n_iter=n_iter,
    )


def brute_force_inertia(points: np.ndarray, k: int) -> float:
    """Exhaustive minimum inertia over all assignments into <= k clusters.

    Exponential in n; only usable for tiny fixtures (n <= ~10).
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    best = np.inf
    for code in range(k**n):
        labels = np.empty(n, dtype=np.int64)
        c = code
        for i in range(n):
            labels[i] = c % k
            c //= k
        total = 0.0
        for j in range(k):
            members = points[labels == j]
            if members.shape[0]:
                total += float(((members - members.mean(axis=0)) ** 2).sum())
        if total < best:
            best = total
    return best
