"""Blocks estimators of pbar, the cluster size distribution and the extremal index.

``pbar_hat`` estimates the mixture law pbar(m) by comparing, over pairs of
blocks, the exceedance count in one block against the maximum of the other.
Disjoint mode averages over ordered pairs of distinct disjoint blocks;
sliding mode averages over all ordered pairs of sliding windows that do not
overlap.  The recursion

    pi(m) = 4*pbar(m) - 2*sum_{k=1}^{m-1} pi(m-k)*pbar(k)

then turns either estimate into an estimate of pi, and the extremal index is
estimated by the reciprocal partial mean 1 / sum_{j<=m} j*pi(j).

The sliding mode runs through a threshold sweep in O(n*b + n*log n) instead
of the naive O(n^2 * b) pair enumeration; both are exposed and agree exactly
(all pair statistics are integer counts, divided once at the end).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import FitMixin, as_sample, check_block_size
from .blocks import ranks, sliding_maxima
from .errors import DegenerateEstimateError

__all__ = [
    "PbarEstimate",
    "PiEstimate",
    "pbar_hat",
    "sliding_pair_sweep",
    "sliding_pair_naive",
    "pi_from_pbar",
    "theta_hat",
    "ClusterSizeEstimator",
]

_MODES = ("disjoint", "sliding")
_SCALES = ("z", "y")


@dataclass(frozen=True)
class PbarEstimate:
    """Estimated pbar(1..m_max) plus the integer pair statistics behind it.

    ``values[m-1]`` estimates pbar(m); ``counts[m-1]`` is the number of
    ordered block pairs whose exceedance count equalled m, and ``pair_count``
    the divisor (k(k-1) for disjoint mode, |D_n| for sliding mode).
    """

    values: np.ndarray
    counts: np.ndarray
    pair_count: int
    b: int
    mode: str
    scale: str

    @property
    def m_max(self):
        return self.values.size


@dataclass(frozen=True)
class PiEstimate:
    """Estimated cluster size distribution pi(1..m_max).

    ``values`` are the raw recursion outputs unless ``clipped`` is set; raw
    values may fall outside [0, 1].  ``method`` identifies the producing
    estimator ("sliding-z", "hsing", ...).
    """

    values: np.ndarray
    method: str
    b: int
    clipped: bool = False
    pbar: Optional[PbarEstimate] = None

    @property
    def m_max(self):
        return self.values.size


def _check_spec(mode, scale, m_max):
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if scale not in _SCALES:
        raise ValueError(f"scale must be one of {_SCALES}, got {scale!r}")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")


def _comparison_series(x, scale):
    """The series actually compared against thresholds: raw values on the
    Z scale, empirical c.d.f. values on the Y scale."""
    return x if scale == "z" else ranks(x)


def _y_thresholds(block_cdf_maxima):
    # Y_i = -b*log(F_n(M_i)) turns the condition F_n(X_s) > 1 - Y_i/b into
    # F_n(X_s) > 1 + log(F_n(M_i)); F_n(M_i) >= 1/n keeps the log finite.
    return 1.0 + np.log(block_cdf_maxima)


def _flat_ranges(lo, hi):
    """Concatenate the integer ranges [lo[i], hi[i]] (inclusive)."""
    lens = hi - lo + 1
    total = int(lens.sum())
    shifts = np.repeat(np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return np.repeat(lo, lens) + np.arange(total) - shifts


def sliding_pair_sweep(x, b, thresholds, m_max, scale="z"):
    """Histogram of per-window exceedance counts over all non-overlapping windows.

    For every sliding-window start i, row i counts the windows i' with
    |i - i'| >= b whose number of entries strictly above ``thresholds[i]``
    equals c, for c = 0..m_max plus an overflow bucket (last column).

    Descending threshold sweep: window exceedance counters and their global
    histogram are updated as the level drops past each data value (each value
    touches at most b windows, O(1) histogram work per touch); a query then
    reads the histogram and subtracts the at most 2b-1 near windows by direct
    counter lookup.  Total cost O(n*b + n*log n), and the output equals
    :func:`sliding_pair_naive` exactly.
    """
    x = as_sample(x)
    n = x.size
    b = check_block_size(n, b)
    series = _comparison_series(x, scale)
    P = n - b + 1
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.shape != (P,):
        raise ValueError(f"need one threshold per window start: expected {P}, got {thresholds.shape}")
    cap = m_max + 1

    pos_desc = np.argsort(-series, kind="stable")
    vals_desc = series[pos_desc]
    neg_vals = -vals_desc  # ascending, for searchsorted

    cnt = np.zeros(P, dtype=np.int64)
    hist = np.zeros(cap + 1, dtype=np.int64)
    hist[0] = P
    out = np.zeros((P, cap + 1), dtype=np.int64)

    applied = 0
    for q in np.argsort(-thresholds, kind="stable"):
        t = thresholds[q]
        new_applied = int(np.searchsorted(neg_vals, -t, side="left"))  # #values > t
        if new_applied > applied:
            pos = pos_desc[applied:new_applied]
            lo = np.maximum(pos - b + 1, 0)
            hi = np.minimum(pos, P - 1)
            delta = np.bincount(_flat_ranges(lo, hi), minlength=P)
            aff = np.nonzero(delta)[0]
            old = np.minimum(cnt[aff], cap)
            cnt[aff] += delta[aff]
            new = np.minimum(cnt[aff], cap)
            hist += np.bincount(new, minlength=cap + 1) - np.bincount(old, minlength=cap + 1)
            applied = new_applied
        near = np.minimum(cnt[max(0, q - b + 1) : min(P - 1, q + b - 1) + 1], cap)
        out[q] = hist - np.bincount(near, minlength=cap + 1)
    return out


def sliding_pair_naive(x, b, thresholds, m_max, scale="z"):
    """Reference O(n^2 * b) enumeration of the same histogram as the sweep."""
    x = as_sample(x)
    n = x.size
    b = check_block_size(n, b)
    series = _comparison_series(x, scale)
    P = n - b + 1
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.shape != (P,):
        raise ValueError(f"need one threshold per window start: expected {P}, got {thresholds.shape}")
    cap = m_max + 1
    windows = np.lib.stride_tricks.sliding_window_view(series, b)
    out = np.zeros((P, cap + 1), dtype=np.int64)
    for i in range(P):
        c = np.minimum(np.count_nonzero(windows > thresholds[i], axis=1), cap)
        far = np.abs(np.arange(P) - i) >= b
        out[i] = np.bincount(c[far], minlength=cap + 1)
    return out


def pbar_hat(x, b, mode="sliding", scale="z", m_max=5):
    """Pair-averaged estimate of pbar(1..m_max) from one sample."""
    x = as_sample(x)
    n = x.size
    b = check_block_size(n, b)
    _check_spec(mode, scale, m_max)
    series = _comparison_series(x, scale)

    if mode == "disjoint":
        k = n // b
        blocks = series[: k * b].reshape(k, b)
        maxima = blocks.max(axis=1)
        thr = maxima if scale == "z" else _y_thresholds(maxima)
        # counts[i, i'] = exceedances of threshold i inside block i'
        counts = (blocks[None, :, :] > thr[:, None, None]).sum(axis=2)
        off = ~np.eye(k, dtype=bool)
        capped = np.minimum(counts[off], m_max + 1)
        hist = np.bincount(capped, minlength=m_max + 2)
        pair_count = k * (k - 1)
    else:
        maxima = sliding_maxima(series, b)
        thr = maxima if scale == "z" else _y_thresholds(maxima)
        table = sliding_pair_sweep(x, b, thr, m_max, scale=scale)
        hist = table.sum(axis=0)
        pair_count = int(hist.sum())  # = |D_n|, windows at distance >= b

    counts = hist[1 : m_max + 1].astype(np.int64)
    values = counts / pair_count
    return PbarEstimate(values=values, counts=counts, pair_count=pair_count,
                        b=b, mode=mode, scale=scale)


def pi_from_pbar(pbar, clip=False):
    """Invert the pbar recursion: pi(m) = 4*pbar(m) - 2*sum_{k<m} pi(m-k)*pbar(k).

    Raw outputs may be negative; ``clip`` applies a post-hoc floor at zero
    (no renormalization).
    """
    p = np.asarray(pbar.values, dtype=float)
    m_max = p.size
    pi = np.zeros(m_max)
    for m in range(1, m_max + 1):
        s = sum(pi[m - k - 1] * p[k - 1] for k in range(1, m))
        pi[m - 1] = 4.0 * p[m - 1] - 2.0 * s
    if clip:
        pi = np.maximum(pi, 0.0)
    method = f"{pbar.mode}-{pbar.scale}"
    return PiEstimate(values=pi, method=method, b=pbar.b, clipped=clip, pbar=pbar)


def theta_hat(pi, m=None):
    """Extremal index estimate 1 / sum_{j<=m} j*pi(j).

    Raises :class:`DegenerateEstimateError` carrying the denominator when the
    partial mean cluster size is zero or negative.
    """
    values = np.asarray(getattr(pi, "values", pi), dtype=float)
    if m is None:
        m = values.size
    if not 1 <= m <= values.size:
        raise ValueError(f"m must lie in 1..{values.size}, got {m}")
    denom = float(np.sum(np.arange(1, m + 1) * values[:m]))
    if denom <= 0.0:
        raise DegenerateEstimateError(
            f"partial mean cluster size through m={m} is not positive", value=denom
        )
    return 1.0 / denom


class ClusterSizeEstimator(FitMixin):
    """Fit-style front end bundling pbar_hat, the pi recursion and theta_hat.

    Parameters mirror :func:`pbar_hat` plus the clipping flag.  After
    ``fit(x)`` the instance carries ``pbar_`` (:class:`PbarEstimate`),
    ``pi_`` (:class:`PiEstimate`), ``theta_`` (float, or NaN when the
    denominator is degenerate) and ``theta_denominator_``.
    """

    def __init__(self, b, mode="sliding", scale="z", m_max=5, clip=False):
        self.b = b
        self.mode = mode
        self.scale = scale
        self.m_max = m_max
        self.clip = clip

    def fit(self, x):
        self.pbar_ = pbar_hat(x, self.b, mode=self.mode, scale=self.scale, m_max=self.m_max)
        self.pi_ = pi_from_pbar(self.pbar_, clip=self.clip)
        denom = float(np.sum(np.arange(1, self.m_max + 1) * self.pi_.values))
        self.theta_denominator_ = denom
        self.theta_ = 1.0 / denom if denom > 0.0 else float("nan")
        return self

    def theta(self, m=None):
        """theta(m) from the fitted pi; raises on a degenerate denominator."""
        self._check_fitted("pi_")
        return theta_hat(self.pi_, m)
