"""Statistics and diagnostics over trajectory ensembles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import ValidationError
from .sampler import TrajectoryEnsemble

__all__ = [
    "SummaryStats",
    "Histogram",
    "ensemble_stats",
    "final_histogram",
    "score_diff_curve",
    "onset_time",
    "knn_jsd",
    "alignment_gap",
]


@dataclass(frozen=True, eq=False)
class SummaryStats:
    """Per-time mean, unbiased variance and standard error of the mean."""

    times: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    sem: np.ndarray
    n: int


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    n_total: int

    @property
    def centres(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def mean(self) -> float:
        return float(self.centres @ self.counts / self.counts.sum())


def _stats(times, values) -> SummaryStats:
    n = values.shape[0]
    if n == 0:
        raise ValidationError("ensemble_nonempty", "ensemble has no trajectories")
    mean = values.mean(axis=0)
    var = values.var(axis=0, ddof=1) if n > 1 else np.zeros_like(mean)
    return SummaryStats(np.asarray(times), mean, var, np.sqrt(var / n), n)


def ensemble_stats(e: TrajectoryEnsemble) -> SummaryStats:
    """Mean and unbiased (``n - 1``) variance of ``q`` at each recorded time."""
    return _stats(e.times, e.q_values)


def final_histogram(e: TrajectoryEnsemble, bins: int = 60, range=None) -> Histogram:
    """Histogram of ``q(0)``; the default range is mean +- 5 std."""
    if isinstance(bins, bool) or not isinstance(bins, (int, np.integer)) or bins < 1:
        raise ValidationError("bins_positive", f"bins must be an integer >= 1, got {bins!r}")
    q = e.final_q
    if q.size == 0:
        raise ValidationError("ensemble_nonempty", "ensemble has no trajectories")
    if range is None:
        mu = float(q.mean())
        half = 5.0 * float(q.std(ddof=1)) if q.size > 1 else 0.0
        if half == 0.0:
            half = 0.5
        range = (mu - half, mu + half)
    lo, hi = range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValidationError("histogram_range", f"range must be finite with lo < hi, got {range}")
    counts, edges = np.histogram(q, bins=bins, range=(lo, hi))
    return Histogram(edges, counts, int(counts.sum()))


def score_diff_curve(e: TrajectoryEnsemble) -> SummaryStats:
    """Ensemble statistics of the score-difference norm along the paths."""
    if e.score_diff_norms is None:
        raise ValidationError("score_diff_recorded", "ensemble carries no score-difference norms")
    return _stats(e.times, e.score_diff_norms)


def onset_time(curve: SummaryStats, fraction: float = 0.1) -> float:
    """First recorded time, scanning down from ``t_f``, where the mean reaches ``fraction`` of its peak."""
    peak = float(np.max(curve.mean))
    if not peak > 0:
        raise ValidationError("curve_positive", "curve has no positive values")
    order = np.argsort(-curve.times, kind="stable")
    hits = order[curve.mean[order] >= fraction * peak]
    return float(curve.times[hits[0]])


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def _kl_to_mixture(a, pooled, k):
    """k-NN estimate of ``KL(A || (A + B)/2)`` in nats."""
    n, d = a.shape
    m_total = pooled.shape[0]
    rho = cKDTree(a).query(a, k=k + 1, workers=-1)[0][:, k]
    nu = cKDTree(pooled).query(a, k=k + 1, workers=-1)[0][:, k]
    tiny = np.finfo(float).tiny
    log_ratio = np.log(np.maximum(nu, tiny)) - np.log(np.maximum(rho, tiny))
    return d * log_ratio.mean() + math.log((m_total - 1) / (n - 1))


def knn_jsd(samples_a, samples_b, k: int = 1) -> float:
    """Jensen-Shannon divergence from k-nearest-neighbour distances, in nats.

    Each half ``KL(A || M)`` compares the ``k``-th neighbour distance of a
    point within its own sample to that within the pooled sample, which
    is a draw from the equal mixture ``M``.  The result is clipped to
    ``[0, log 2]``.
    """
    a, b = _as_points(samples_a), _as_points(samples_b)
    if a.shape[1] != b.shape[1]:
        raise ValidationError("dimension_match", f"sample dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValidationError("k_positive", f"k must be an integer >= 1, got {k!r}")
    if k >= min(len(a), len(b)):
        raise ValidationError("k_below_count", f"k={k} must be smaller than both sample sizes")
    pooled = np.concatenate([a, b])
    jsd = 0.5 * _kl_to_mixture(a, pooled, k) + 0.5 * _kl_to_mixture(b, pooled, k)
    return float(min(max(jsd, 0.0), math.log(2.0)))


def alignment_gap(guided: TrajectoryEnsemble, unguided: TrajectoryEnsemble, t: float):
    """Return ``(mean_guided(t) - mean_unguided(t), combined standard error)``."""
    g = guided.at(t)
    u = unguided.at(t)
    se2 = 0.0
    for v in (g, u):
        if v.size > 1:
            se2 += v.var(ddof=1) / v.size
    return float(g.mean() - u.mean()), math.sqrt(se2)
