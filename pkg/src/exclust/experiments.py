"""Monte Carlo benchmarking of the cluster size estimators.

Runs N replications of (simulate, estimate over a block-size grid) for a
configurable set of estimators and summarizes bias, variance and MSE of
pi-hat(m) against the model's known limit values.  Replications are pure
functions of a mixed per-rep seed and are folded in rep order, so results
are byte-identical for any worker count.
"""
from __future__ import annotations

import multiprocessing
import os
from dataclasses import dataclass

import numpy as np

from .competitors import CompetitorSpec, ferro_pi, hsing_pi, robert_pi
from .cpmodel import geometric_pi
from .errors import DegenerateEstimateError
from .estimators import pbar_hat, pi_from_pbar
from .simulate import ModelSpec, gen, substream_seed

__all__ = [
    "ESTIMATORS",
    "ExperimentConfig",
    "SummaryRow",
    "SummaryTable",
    "run",
    "write_csv",
    "render_svg",
    "read_config",
]

ESTIMATORS = ("db-z", "db-y", "sb-z", "sb-y", "hsing", "ferro", "robert")

DEFAULT_GRID = tuple(range(6, 40, 2))

# limit values of (theta, pi(1..5)) for the fixed reference parameters;
# armax truths come from geometric_pi for any alpha
_FIXED_TRUTH = {
    ("sqarch", 0.5): (0.727, (0.751, 0.168, 0.055, 0.014, 0.008)),
    ("ar_uniform", 4): (0.75, (0.75, 0.1875, 0.0469, 0.0117, 0.0029)),
}


@dataclass(frozen=True)
class ExperimentConfig:
    model_kind: str
    model_param: float | None = None
    n: int = 2000
    reps: int = 500
    block_grid: tuple = DEFAULT_GRID
    estimators: tuple = ESTIMATORS
    m_max: int = 5
    master_seed: int = 0
    burnin: int = 1000
    truth_theta: float | None = None
    truth_pi: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "block_grid", tuple(int(b) for b in self.block_grid))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.truth_pi is not None:
            object.__setattr__(self, "truth_pi", tuple(float(v) for v in self.truth_pi))
        if self.reps < 2:
            raise ValueError(f"reps must be >= 2, got {self.reps}")
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        for b in self.block_grid:
            if b % 2 != 0 or b > self.n // 2:
                raise ValueError(
                    f"block sizes must be even and at most n/2 = {self.n // 2}, got {b}"
                )
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators: {sorted(unknown)}")
        # the model spec is validated eagerly so bad params fail here
        ModelSpec(self.model_kind, self.n, self.model_param, self.burnin, 0)

    def truth(self):
        """(theta, pi(1..m_max)) the summaries are centered on."""
        if self.truth_pi is not None:
            pi = self.truth_pi
            if len(pi) < self.m_max:
                raise ValueError("truth_pi is shorter than m_max")
            theta = self.truth_theta
            if theta is None:
                raise ValueError("truth_pi requires truth_theta")
            return theta, np.asarray(pi[: self.m_max])
        if self.model_kind == "armax":
            pi = geometric_pi(self.model_param)
            return 1.0 - self.model_param, pi.weights[1 : self.m_max + 1].copy()
        if self.model_kind == "iid_frechet":
            pi = np.zeros(self.m_max)
            pi[0] = 1.0
            return 1.0, pi
        key = (self.model_kind, self.model_param)
        if key in _FIXED_TRUTH and self.m_max <= 5:
            theta, pi = _FIXED_TRUTH[key]
            return theta, np.asarray(pi[: self.m_max])
        raise ValueError(
            f"no stored limit values for {key}; supply truth_theta and truth_pi"
        )


@dataclass(frozen=True)
class SummaryRow:
    estimator: str
    b: int
    m: int
    bias: float
    variance: float
    mse: float
    n_missing: int

    @property
    def mse_1e3(self):
        return 1e3 * self.mse


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple
    reps: int

    def min_mse(self, estimator, m):
        """Row with the smallest MSE over the block grid for (estimator, m)."""
        best = None
        for row in self.rows:
            if row.estimator != estimator or row.m != m or np.isnan(row.mse):
                continue
            if best is None or row.mse < best.mse:
                best = row
        if best is None:
            raise ValueError(f"no finite MSE rows for ({estimator}, m={m})")
        return best


def _estimate_values(x, estimator, b, m_max):
    if estimator in ("db-z", "db-y", "sb-z", "sb-y"):
        mode = "disjoint" if estimator.startswith("db") else "sliding"
        pb = pbar_hat(x, b, mode=mode, scale=estimator[-1], m_max=m_max)
        return pi_from_pbar(pb).values
    if estimator == "hsing":
        return hsing_pi(x, b, m_max).values
    if estimator == "ferro":
        return ferro_pi(x, b, m_max).values
    return robert_pi(x, CompetitorSpec("robert", b=b, m_max=m_max)).values


def _run_rep(args):
    config, rep = args
    seed = substream_seed(config.master_seed, rep)
    x = gen(
        ModelSpec(config.model_kind, config.n, config.model_param, config.burnin, seed)
    )
    out = np.full(
        (len(config.estimators), len(config.block_grid), config.m_max), np.nan
    )
    for ib, b in enumerate(config.block_grid):
        for ie, est in enumerate(config.estimators):
            try:
                out[ie, ib] = _estimate_values(x, est, b, config.m_max)
            except DegenerateEstimateError:
                pass  # stays NaN; disclosed via n_missing
    return out


def run(config, workers=None):
    """Run the experiment; the result does not depend on `workers`."""
    if workers is None:
        workers = os.cpu_count() or 1
    tasks = [(config, rep) for rep in range(config.reps)]
    if workers <= 1:
        results = [_run_rep(t) for t in tasks]
    else:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_run_rep, tasks)
    stack = np.stack(results)  # (reps, est, b, m), rep-indexed fold below
    _, truth_pi = config.truth()

    rows = []
    for ie, est in enumerate(config.estimators):
        for ib, b in enumerate(config.block_grid):
            for m in range(1, config.m_max + 1):
                vals = stack[:, ie, ib, m - 1]
                good = vals[~np.isnan(vals)]
                n_missing = config.reps - good.size
                if good.size == 0:
                    bias = variance = mse = float("nan")
                else:
                    bias = float(np.mean(good) - truth_pi[m - 1])
                    variance = float(np.var(good))
                    mse = float(np.mean((good - truth_pi[m - 1]) ** 2))
                rows.append(SummaryRow(est, b, m, bias, variance, mse, n_missing))
    return SummaryTable(rows=tuple(rows), reps=config.reps)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def write_csv(table, destination):
    """Write the summary as CSV with 10-significant-digit floats."""
    if not table.rows:
        raise ValueError("summary table is empty; nothing to write")
    lines = ["estimator,b,m,bias,variance,mse,mse_1e3,n_missing"]
    for r in table.rows:
        lines.append(
            f"{r.estimator},{r.b},{r.m},{r.bias:.10g},{r.variance:.10g},"
            f"{r.mse:.10g},{r.mse_1e3:.10g},{r.n_missing}"
        )
    with open(destination, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_PALETTE = {
    "db-z": "#1f77b4",
    "db-y": "#aec7e8",
    "sb-z": "#d62728",
    "sb-y": "#ff9896",
    "hsing": "#2ca02c",
    "ferro": "#9467bd",
    "robert": "#8c564b",
}

_SVG_W = 720
_PANEL_H = 220
_MARGIN = 50


def _fmt(v):
    return f"{v:.6g}"


def render_svg(table, metric, destination):
    """Line chart of metric x 1000 against block size, one panel per m."""
    if not table.rows:
        raise ValueError("summary table is empty; nothing to render")
    if metric not in ("bias", "variance", "mse"):
        raise ValueError(f"metric must be bias, variance or mse, got {metric!r}")
    ms = sorted({r.m for r in table.rows})
    ests = [e for e in ESTIMATORS if any(r.estimator == e for r in table.rows)]
    bs = sorted({r.b for r in table.rows})
    height = _MARGIN + len(ms) * _PANEL_H
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{height}" viewBox="0 0 {_SVG_W} {height}">',
        f'<text x="{_MARGIN}" y="20" font-family="sans-serif" font-size="14">'
        f"{metric} x 1000 by block size</text>",
    ]
    for i, est in enumerate(ests):
        x0 = _MARGIN + 90 * i
        parts.append(
            f'<line x1="{x0}" y1="32" x2="{x0 + 18}" y2="32" '
            f'stroke="{_PALETTE[est]}" stroke-width="2"/>'
            f'<text x="{x0 + 22}" y="36" font-family="sans-serif" '
            f'font-size="11">{est}</text>'
        )

    def xpos(b):
        if len(bs) == 1:
            return _SVG_W / 2
        return _MARGIN + (_SVG_W - 2 * _MARGIN) * (b - bs[0]) / (bs[-1] - bs[0])

    for panel, m in enumerate(ms):
        top = _MARGIN + panel * _PANEL_H
        plot_h = _PANEL_H - 60
        vals = [
            1e3 * getattr(r, metric)
            for r in table.rows
            if r.m == m and not np.isnan(getattr(r, metric))
        ]
        lo = min(vals + [0.0]) if vals else 0.0
        hi = max(vals + [1e-12]) if vals else 1.0
        span = hi - lo or 1.0

        def ypos(v):
            return top + 20 + plot_h * (hi - v) / span

        parts.append(
            f'<text x="{_MARGIN}" y="{top + 12}" font-family="sans-serif" '
            f'font-size="12">m = {m}</text>'
        )
        ax_y = top + 20 + plot_h
        parts.append(
            f'<line x1="{_MARGIN}" y1="{ax_y}" x2="{_SVG_W - _MARGIN}" '
            f'y2="{ax_y}" stroke="#999"/>'
        )
        for b in (bs[0], bs[-1]):
            parts.append(
                f'<text x="{_fmt(xpos(b))}" y="{ax_y + 14}" '
                f'font-family="sans-serif" font-size="10">{b}</text>'
            )
        for v in (hi, lo):
            parts.append(
                f'<text x="4" y="{_fmt(ypos(v) + 4)}" font-family="sans-serif" '
                f'font-size="10">{_fmt(v)}</text>'
            )
        for est in ests:
            pts = [
                (r.b, 1e3 * getattr(r, metric))
                for r in table.rows
                if r.estimator == est and r.m == m
                and not np.isnan(getattr(r, metric))
            ]
            if not pts:
                continue
            coords = " ".join(f"{_fmt(xpos(b))},{_fmt(ypos(v))}" for b, v in pts)
            parts.append(
                f'<polyline points="{coords}" fill="none" '
                f'stroke="{_PALETTE[est]}" stroke-width="1.5"/>'
            )
    parts.append("</svg>")
    with open(destination, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_LIST_FIELDS = {"block_grid", "estimators", "truth_pi"}
_INT_FIELDS = {"n", "reps", "m_max", "master_seed", "burnin"}
_FLOAT_FIELDS = {"model_param", "truth_theta"}


def read_config(path):
    """Parse a flat key=value file into an ExperimentConfig.

    Keys mirror the config field names exactly; lists are comma-separated;
    blank lines and '#' comments are ignored.
    """
    kwargs = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key == "model_kind":
                kwargs[key] = value
            elif key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = float(value) if value else None
            elif key == "block_grid":
                kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key == "estimators":
                kwargs[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "truth_pi":
                kwargs[key] = (
                    tuple(float(v) for v in value.split(",") if v.strip())
                    if value
                    else None
                )
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    if "model_kind" not in kwargs:
        raise ValueError(f"{path}: missing required key model_kind")
    return ExperimentConfig(**kwargs)
