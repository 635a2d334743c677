"""Cluster size estimators from the literature, used as benchmarks.

Three classical approaches: a blocks estimator with an order-statistic
threshold, an inter-exceedance-times (intervals) declustering estimator,
and an integrated multilevel blocks estimator that inverts the
compound-Poisson count law on a grid of thresholds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import as_sample, check_block_size
from .errors import DegenerateEstimateError
from .estimators import PiEstimate

__all__ = [
    "CompetitorSpec",
    "hsing_pi",
    "ferro_pi",
    "robert_pi",
    "cpp_invert",
    "split_clusters",
]

_KINDS = ("hsing", "ferro", "robert")


@dataclass(frozen=True)
class CompetitorSpec:
    """Configuration of a benchmark estimator."""

    kind: str
    b: int
    m_max: int = 5
    robert_sigma: float = 0.7
    robert_phi: float = 1.3
    robert_grid: int = 25

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        if not 0 < self.robert_sigma < self.robert_phi:
            raise ValueError(
                f"need 0 < sigma < phi, got ({self.robert_sigma}, {self.robert_phi})"
            )
        if self.robert_grid < 2:
            raise ValueError(f"grid must be >= 2, got {self.robert_grid}")


def _sizes_to_pi(sizes, n_clusters, m_max, method, b):
    values = np.zeros(m_max)
    for m in range(1, m_max + 1):
        values[m - 1] = np.count_nonzero(sizes == m) / n_clusters
    return PiEstimate(values=values, method=method, b=b)


def hsing_pi(x, b, m_max=5):
    """Blocks estimator: cluster sizes read off disjoint blocks above an
    order-statistic threshold.

    The threshold is the (n - floor(n/s))-th ascending order statistic with
    s = 2(b - 3), so about n/s observations exceed it.  The estimate is the
    fraction of occupied blocks containing exactly m exceedances.
    """
    x = as_sample(x)
    n = x.size
    if b < 4:
        raise ValueError(f"b must be >= 4 so the threshold rank is defined, got {b}")
    check_block_size(n, b)
    s = 2 * (b - 3)
    v = np.sort(x, kind="stable")[n - n // s - 1]
    k = n // b
    counts = (x[: k * b].reshape(k, b) > v).sum(axis=1)
    occupied = int(np.count_nonzero(counts >= 1))
    if occupied == 0:
        raise DegenerateEstimateError("no block contains an exceedance")
    return _sizes_to_pi(counts, occupied, m_max, "hsing", b)


def split_clusters(positions, n_clusters):
    """Sizes after cutting a sorted position sequence at its largest gaps.

    Cuts at the n_clusters - 1 largest inter-position gaps, earliest gaps
    first on ties; returns the cluster sizes in temporal order.
    """
    positions = np.asarray(positions)
    n = positions.size
    if not 1 <= n_clusters <= n:
        raise ValueError(f"need 1 <= n_clusters <= {n}, got {n_clusters}")
    gaps = np.diff(positions)
    cut = np.sort(np.argsort(-gaps, kind="stable")[: n_clusters - 1])
    edges = np.concatenate(([0], cut + 1, [n]))
    return np.diff(edges)


def ferro_pi(x, b, m_max=5):
    """Intervals estimator: decluster the top N = 3 floor(n/b) exceedances.

    The intervals estimate of the extremal index from the inter-exceedance
    times T_i fixes the cluster count C = floor(theta~ * N); the exceedance
    sequence is then cut at its C - 1 largest gaps.
    """
    x = as_sample(x)
    n = x.size
    num = 3 * (n // b)
    if num < 4:
        raise ValueError(f"needs 3*floor(n/b) >= 4 exceedances, got {num}")
    if num > n:
        raise ValueError(f"3*floor(n/b) = {num} exceeds the sample length {n}")
    pos = np.sort(np.argsort(-x, kind="stable")[:num])
    T = np.diff(pos).astype(float)
    if np.all(T == 1):
        raise DegenerateEstimateError("all exceedances are adjacent")
    if np.max(T) > 2:
        shifted = T - 1.0
        theta = 2.0 * shifted.sum() ** 2 / ((num - 1) * np.sum(shifted * (T - 2.0)))
    else:
        theta = 2.0 * T.sum() ** 2 / ((num - 1) * np.sum(T * T))
    theta = min(1.0, theta)
    n_clusters = int(theta * num)
    if n_clusters < 1:
        raise DegenerateEstimateError("cluster count fell below one", value=theta)
    sizes = split_clusters(pos, n_clusters)
    return _sizes_to_pi(sizes, n_clusters, m_max, "ferro", b)


def cpp_invert(p_values, tau):
    """Invert count probabilities p^(tau)(0..m) to (theta, pi(1..m)).

    Uses p^(tau)(0) = e^{-theta tau} and then solves
    p^(tau)(m) = e^{-theta tau} sum_{j<=m} (theta tau)^j / j! pi^{*j}(m)
    for pi(m) recursively; the j >= 2 convolutions only involve
    pi(1..m-1).  Exact inverse of the forward law for proper inputs.
    """
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("p_values must contain p(0)..p(m) with m >= 1")
    if not 0.0 < p[0] < 1.0:
        raise ValueError(f"p(0) must lie strictly in (0, 1), got {p[0]}")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    lam = -math.log(p[0])
    m_top = p.size - 1
    pi = np.zeros(m_top + 1)
    for m in range(1, m_top + 1):
        tail = 0.0
        cur = pi
        fact = lam
        for j in range(2, m + 1):
            cur = np.convolve(cur, pi)[: m_top + 1]
            fact *= lam / j
            tail += fact * cur[m]
        pi[m] = (p[m] / p[0] - tail) / lam
    return lam / tau, pi[1:]


def robert_pi(x, spec):
    """Integrated multilevel blocks estimator.

    For each tau on a uniform grid in [sigma, phi], the threshold is the
    ceil(k tau)-th largest value (k = floor(n/b) blocks, so about tau
    expected exceedances per block); the empirical count fractions are
    inverted through the compound-Poisson law and the results averaged over
    the grid.  Grid points with a degenerate zero-count fraction are
    skipped.
    """
    if spec.kind != "robert":
        raise ValueError(f"spec.kind must be 'robert', got {spec.kind!r}")
    x = as_sample(x)
    n = x.size
    b = spec.b
    check_block_size(n, b)
    k = n // b
    blocks = x[: k * b].reshape(k, b)
    desc = np.sort(x, kind="stable")[::-1]
    acc = np.zeros(spec.m_max)
    used = 0
    for tau in np.linspace(spec.robert_sigma, spec.robert_phi, spec.robert_grid):
        rank = math.ceil(k * tau)
        if rank > n:
            continue
        counts = (blocks > desc[rank - 1]).sum(axis=1)
        phat = np.array(
            [np.count_nonzero(counts == m) / k for m in range(spec.m_max + 1)]
        )
        if phat[0] == 0.0 or phat[0] == 1.0:
            continue
        acc += cpp_invert(phat, tau)[1]
        used += 1
    if used == 0:
        raise DegenerateEstimateError("every grid threshold was degenerate")
    return PiEstimate(values=acc / used, method="robert", b=b)
