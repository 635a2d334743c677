"""Seeded generators for the reference time-series models.

Four stationary models with known extremal behaviour:

- ``armax``: X_s = max(alpha X_{s-1}, (1-alpha) Z_s), standard Frechet
  innovations; extremal index 1 - alpha, geometric cluster sizes.
- ``sqarch``: X_s = (2e-5 + lambda X_{s-1}) Z_s^2, standard normal
  innovations (a squared ARCH(1) process).
- ``ar_uniform``: X_s = X_{s-1} / r + Z_s with Z_s uniform on
  {0, 1/r, ..., (r-1)/r}; stationary Uniform(0, 1) marginal.
- ``iid_frechet``: independent standard Frechet draws.

Generation is a pure function of the spec; replications get independent
streams through a stateless seed-mixing hash.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

__all__ = ["ModelSpec", "gen", "substream_seed"]

KINDS = ("armax", "sqarch", "ar_uniform", "iid_frechet")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ModelSpec:
    """A model kind with its single parameter, length, burn-in and seed."""

    kind: str
    n: int
    param: float | None = None
    burnin: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 10:
            raise ValueError(f"n must be >= 10, got {self.n}")
        if self.burnin < 0:
            raise ValueError(f"burnin must be >= 0, got {self.burnin}")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.kind == "armax":
            if self.param is None or not 0.0 <= self.param < 1.0:
                raise ValueError(f"armax needs alpha in [0, 1), got {self.param}")
        elif self.kind == "sqarch":
            if self.param is None or not 0.0 < self.param < 1.0:
                raise ValueError(f"sqarch needs lambda in (0, 1), got {self.param}")
        elif self.kind == "ar_uniform":
            if self.param is None or self.param != int(self.param) or self.param < 2:
                raise ValueError(f"ar_uniform needs integer r >= 2, got {self.param}")
        elif self.param is not None:
            raise ValueError("iid_frechet takes no parameter")


def _frechet(rng, size):
    # X = -1/log(U) has P(X <= x) = exp(-1/x)
    return -1.0 / np.log(rng.random(size))


def _gen_armax(rng, alpha, total):
    z = _frechet(rng, total + 1)  # z[0] doubles as the start value X_0
    if alpha == 0.0:
        return z[1:]
    # log X_s = max_j {(s-j) log(alpha) + c_j}: a running maximum after
    # tilting by -s log(alpha), all in log space to avoid overflow
    c = np.log(z)
    c[1:] += np.log1p(-alpha)
    la = np.log(alpha)
    tilt = la * np.arange(total + 1)
    return np.exp(np.maximum.accumulate(c - tilt) + tilt)[1:]


def _gen_sqarch(rng, lam, total):
    z2 = rng.standard_normal(total + 1) ** 2
    out = np.empty(total)
    x = 1e-4 * z2[0]
    for s in range(total):
        x = (2e-5 + lam * x) * z2[s + 1]
        out[s] = x
    return out


def _gen_ar(rng, r, total):
    r = int(r)
    z = rng.integers(0, r, size=total) / r
    x0 = rng.random()
    return lfilter([1.0], [1.0, -1.0 / r], z, zi=np.array([x0 / r]))[0]


def gen(spec):
    """Generate the sample described by `spec`; same spec, same sample."""
    rng = np.random.default_rng(int(spec.seed))
    total = spec.burnin + spec.n
    if spec.kind == "armax":
        x = _gen_armax(rng, spec.param, total)
    elif spec.kind == "iid_frechet":
        x = _gen_armax(rng, 0.0, total)
    elif spec.kind == "sqarch":
        x = _gen_sqarch(rng, spec.param, total)
    else:
        x = _gen_ar(rng, spec.param, total)
    return x[spec.burnin :]


def substream_seed(master, rep_index):
    """Stateless 64-bit seed for replication `rep_index` of stream `master`.

    An avalanche mix (splitmix-style multiply-xorshift rounds) of the pair,
    so distinct indices give unrelated streams and results do not depend on
    call order.
    """
    if rep_index < 0:
        raise ValueError(f"rep_index must be >= 0, got {rep_index}")
    if not 0 <= int(master) <= _MASK64:
        raise ValueError("master seed must fit in 64 unsigned bits")
    z = (int(master) + 0x9E3779B97F4A7C15 * (rep_index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)
