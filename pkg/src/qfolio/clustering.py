"""Rolling K-Means market structure and agent-state assembly.

The feature matrix (one [m5, m20, v20] row per stock) is clustered with
Lloyd's algorithm under k-means++ initialization. Cluster summaries plus two
benchmark momentum features form the agent state of length 4K + 2. Clusters
are re-indexed by descending mean 20-day return so that an action id keeps
the same meaning ("k-th strongest momentum group") across months.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InfeasibleError, InsufficientDataError, ValidationError
from .market_data import FEATURE_WINDOW, SHORT_WINDOW

STATE_FIELDS_PER_CLUSTER = 4   # m5, m20, v20 means + size fraction
MARKET_FIELDS = 2              # benchmark m5, m20
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray            # (n,) ints in [0, k)
    centroids: np.ndarray         # (k, 3)
    inertia: float
    inertia_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        centroids = np.asarray(self.centroids, dtype=np.float64)
        labels.setflags(write=False)
        centroids.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "centroids", centroids)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class ClusterFeatures:
    m5_mean: float
    m20_mean: float
    v20_mean: float
    size_frac: float


@dataclass(frozen=True)
class MarketFeatures:
    m5_spx: float
    m20_spx: float


def _kpp_init(features: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: subsequent centers drawn with prob proportional to D^2."""
    n = features.shape[0]
    centroids = np.empty((k, features.shape[1]))
    centroids[0] = features[rng.integers(n)]
    d2 = ((features - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining mass at existing centers; duplicate any point
            centroids[c] = features[rng.integers(n)]
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        idx = min(idx, n - 1)
        centroids[c] = features[idx]
        d2 = np.minimum(d2, ((features - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(
    features: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    init_centroids: np.ndarray | None = None,
) -> ClusterAssignment:
    """Lloyd's algorithm; deterministic for a fixed seed.

    Converges when the largest centroid shift drops below ``tol`` or after
    ``max_iter`` sweeps. A cluster that loses all members is re-seeded with
    the point currently farthest from its own centroid. ``init_centroids``
    overrides the k-means++ seeding (used by the static baseline and by
    translation-invariance checks).
    """
    features = np.ascontiguousarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValidationError("feature matrix must be 2-D")
    n = features.shape[0]
    if k < 2:
        raise ValidationError("need at least 2 clusters")
    if n < k:
        raise InfeasibleError(f"cannot form {k} clusters from {n} points")
    if not np.all(np.isfinite(features)):
        raise ValidationError("feature matrix contains non-finite entries")

    if init_centroids is None:
        centroids = _kpp_init(features, k, np.random.default_rng(seed))
    else:
        centroids = np.array(init_centroids, dtype=np.float64)
        if centroids.shape != (k, features.shape[1]):
            raise ValidationError("init_centroids shape mismatch")

    history = []
    labels, inertia = _kernels.nearest_centroids(features, centroids)
    for _ in range(max_iter):
        means, counts = _kernels.centroid_means(features, labels, k)
        for empty in np.flatnonzero(counts == 0):
            # steal the point farthest from its assigned centroid
            dist = ((features - means[labels]) ** 2).sum(axis=1)
            thief = int(np.argmax(dist))
            means[empty] = features[thief]
            labels = labels.copy()
            labels[thief] = empty
        shift = float(np.sqrt(((means - centroids) ** 2).sum(axis=1)).max())
        centroids = means
        labels, inertia = _kernels.nearest_centroids(features, centroids)
        history.append(inertia)
        if shift < tol:
            break
    return ClusterAssignment(
        labels=labels, centroids=centroids, inertia=inertia,
        inertia_history=tuple(history),
    )


def assign_labels(features: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid labels (Euclidean); ties go to the lowest cluster id."""
    features = np.ascontiguousarray(features, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    if not np.all(np.isfinite(centroids)):
        raise ValidationError("centroids must be finite")
    labels, _ = _kernels.nearest_centroids(features, centroids)
    return labels


def cluster_features(
    features: np.ndarray, labels: np.ndarray, k: int
) -> list[ClusterFeatures]:
    """Per-cluster feature means and size fractions (empty cluster -> zeros)."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValidationError("labels out of range")
    means, counts = _kernels.centroid_means(features, labels, k)
    n = max(labels.shape[0], 1)
    return [
        ClusterFeatures(
            m5_mean=float(means[c, 0]) if counts[c] else 0.0,
            m20_mean=float(means[c, 1]) if counts[c] else 0.0,
            v20_mean=float(means[c, 2]) if counts[c] else 0.0,
            size_frac=float(counts[c]) / n,
        )
        for c in range(k)
    ]


def market_features(benchmark_returns: np.ndarray, end_index: int) -> MarketFeatures:
    """Compounded 5- and 20-day benchmark returns ending at ``end_index``."""
    benchmark_returns = np.asarray(benchmark_returns, dtype=np.float64)
    if end_index < FEATURE_WINDOW - 1 or end_index >= benchmark_returns.shape[0]:
        raise InsufficientDataError(
            f"end_index {end_index} leaves fewer than {FEATURE_WINDOW} benchmark returns"
        )
    win = benchmark_returns[end_index - FEATURE_WINDOW + 1 : end_index + 1]
    if not np.all(np.isfinite(win)):
        raise InsufficientDataError("benchmark window contains non-finite returns")
    return MarketFeatures(
        m5_spx=float(np.prod(1.0 + win[-SHORT_WINDOW:]) - 1.0),
        m20_spx=float(np.prod(1.0 + win) - 1.0),
    )


def assemble_state(cf: list[ClusterFeatures], mf: MarketFeatures) -> np.ndarray:
    """Concatenate [F^(0), ..., F^(K-1), M] into the 4K+2 agent state."""
    out = np.empty(STATE_FIELDS_PER_CLUSTER * len(cf) + MARKET_FIELDS)
    for i, f in enumerate(cf):
        out[4 * i : 4 * i + 4] = (f.m5_mean, f.m20_mean, f.v20_mean, f.size_frac)
    out[-2:] = (mf.m5_spx, mf.m20_spx)
    if not np.all(np.isfinite(out)):
        raise ValidationError("agent state contains non-finite entries")
    return out


def state_dim(k: int) -> int:
    return STATE_FIELDS_PER_CLUSTER * k + MARKET_FIELDS


def canonicalize_clusters(
    assignment: ClusterAssignment, cf: list[ClusterFeatures]
) -> tuple[ClusterAssignment, list[ClusterFeatures]]:
    """Reindex clusters by descending m20_mean (ties by original id).

    Keeps action k meaning "k-th strongest trailing momentum" in every month.
    """
    if len(cf) != assignment.k:
        raise ValidationError("cluster feature count does not match assignment")
    order = sorted(range(len(cf)), key=lambda c: (-cf[c].m20_mean, c))
    remap = np.empty(len(cf), dtype=np.int64)
    for new_id, old_id in enumerate(order):
        remap[old_id] = new_id
    reordered = ClusterAssignment(
        labels=remap[assignment.labels],
        centroids=assignment.centroids[order],
        inertia=assignment.inertia,
        inertia_history=assignment.inertia_history,
    )
    return reordered, [cf[old] for old in order]


def standardize_columns(features: np.ndarray) -> np.ndarray:
    """Z-score each column; zero-variance columns are left centered."""
    features = np.asarray(features, dtype=np.float64)
    mean = features.mean(axis=0)
    std = features.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return (features - mean) / std
