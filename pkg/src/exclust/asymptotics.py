"""Limit covariances of the block-maxima cluster size estimators.

Scaled block thresholds converge to an Exp(theta) law H, and both block
schemes lead to covariance matrices of the form

    d(j, j') = integral of Cov(K_j(tau), K_j'(tau')) dH(tau) dH(tau'),

where K_j couples an exceedance-count indicator with its smoothed
counterpart through the block's own threshold.  For disjoint blocks the
threshold integrals reduce to one-dimensional quadratures after scaling
one threshold by the other; for sliding blocks the window overlap adds an
outer integral over the overlap fraction xi, evaluated here on a tensor
grid (overlap fraction) x (window ratio) x (threshold).

All integrals over (0, infinity) are mapped to (0, 1) through the
substitution u = H(tau), and every sum over cluster counts is finite and
exact because k-fold convolutions of cluster laws vanish below k.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.optimize import brentq
from scipy.signal import convolve2d
from scipy.special import gammaincc

from .cpmodel import (
    CppModel,
    Pmf,
    cpp_pmf,
    gauss_legendre_01,
    gauss_legendre_panels,
    pbar_theory,
)
from .errors import NumericFailureError, UnsupportedModelError

__all__ = [
    "QuadratureSpec",
    "CovMatrix",
    "sigma_db",
    "sigma_sb",
    "recursion_matrix",
    "gamma",
    "theta_asymp_var",
    "mu2_robert",
    "robert_crossover",
    "sliding_process_cov",
    "disjoint_process_var",
    "cpp_pmf_dtau",
]

_COV_KINDS = ("sigma_db", "sigma_sb", "gamma_db", "gamma_sb")

# input pmfs must carry essentially all their mass below the support cap
_TRUNC_TOL = 1e-8


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre resolution plus a node-doubling stability check."""

    nodes_1d: int = 64
    refinement: bool = True
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.nodes_1d < 8:
            raise ValueError(f"nodes_1d must be >= 8, got {self.nodes_1d}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric limit covariance matrix for counts 1..m."""

    m: int
    entries: np.ndarray
    kind: str

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", ent)
        if self.kind not in _COV_KINDS:
            raise ValueError(f"kind must be one of {_COV_KINDS}, got {self.kind!r}")
        if ent.shape != (self.m, self.m):
            raise ValueError(f"entries must be {self.m}x{self.m}, got {ent.shape}")
        if ent.size and np.max(np.abs(ent - ent.T)) > 1e-10:
            raise ValueError("covariance entries are not symmetric")
        if ent.size and np.min(np.diag(ent)) < -1e-8:
            raise ValueError("covariance diagonal is negative beyond noise floor")


def _require_family(model):
    if model.pi2 is None:
        raise UnsupportedModelError(
            "the covariance integrals need the bivariate cluster family pi2"
        )
    if model.pi.trunc_mass > _TRUNC_TOL:
        raise ValueError(
            f"cluster size pmf truncates {model.pi.trunc_mass:g} mass; "
            "extend its support before evaluating covariances"
        )


def _refined(quad, evaluate):
    """Run `evaluate` at nodes_1d, optionally re-run at double resolution.

    Raises if doubling moves any entry by at least the tolerance.
    """
    coarse = np.asarray(evaluate(quad.nodes_1d))
    if not quad.refinement:
        return coarse
    fine = np.asarray(evaluate(2 * quad.nodes_1d))
    delta = float(np.max(np.abs(fine - coarse))) if fine.size else 0.0
    if delta >= quad.tolerance:
        raise NumericFailureError(
            "quadrature did not stabilize under node doubling", delta=delta
        )
    return fine


def _conv_power_matrix(pi, m):
    """M[k, v] = k-fold convolution of pi at v, for k, v in 0..m."""
    M = np.zeros((m + 1, m + 1))
    M[0, 0] = 1.0
    base = np.zeros(m + 1)
    w = pi.weights[: m + 1]
    base[: w.size] = w
    cur = base.copy()
    for k in range(1, m + 1):
        M[k] = cur
        cur = np.convolve(cur, base)[: m + 1]
    return M


def _bivar_power_stack(family, sigma, m):
    """B[k, r, x] = k-fold convolution of pi2_sigma at (r, x), k in 0..m."""
    B = np.zeros((m + 1, m + 1, m + 1))
    B[0, 0, 0] = 1.0
    base = family.table(sigma, m)
    cur = base
    for k in range(1, m + 1):
        B[k] = cur
        cur = convolve2d(cur, base)[: m + 1, : m + 1]
    return B


def _poisson_matrix(lam, kmax):
    """out[..., k] = exp(-lam) lam^k / k! for k in 0..kmax."""
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.shape + (kmax + 1,))
    out[..., 0] = np.exp(-lam)
    for k in range(1, kmax + 1):
        out[..., k] = out[..., k - 1] * lam / k
    return out


def _shift_gather(pm, m):
    """out[..., a, r] = pm[..., a - r] for a >= r, else 0."""
    a = np.arange(m + 1)[:, None]
    r = np.arange(m + 1)[None, :]
    idx = a - r
    mask = idx >= 0
    return pm[..., np.where(mask, idx, 0)] * mask


def cpp_pmf_dtau(model, tau, m_max):
    """Derivative in tau of the window-length-tau count pmf, for 0..m_max.

    d/dtau p^(tau)(j) = sum_{l>=1} theta [Pois_{l-1} - Pois_l](theta tau)
    pi^{*l}(j) - theta Pois_0(theta tau) 1(j = 0).
    """
    th = model.theta
    M = _conv_power_matrix(model.pi, m_max)
    pois = _poisson_matrix(np.asarray(th * tau), m_max)
    out = th * np.einsum("l,lv->v", pois[:-1] - pois[1:], M[1:])
    out[0] -= th * pois[0]
    return out


# ---------------------------------------------------------------------------
# disjoint blocks
# ---------------------------------------------------------------------------

def _sigma_db_entries(model, m, nodes):
    """Entries d(j, j') for the disjoint-blocks scheme.

    The kernel splits into four cross moments.  Scaling the inner threshold
    (or the indicator-smooth coupling level) by the outer one turns every
    dH x dH integral into Gamma integrals in the outer threshold, which have
    closed forms; only rational functions of the scale ratio s remain to be
    integrated numerically, panel-wise between the family's breakpoints.
    """
    s, w = gauss_legendre_panels(nodes, model.pi2.breakpoints)
    M = _conv_power_matrix(model.pi, m)
    pbar = pbar_theory(model, m).weights[1:]
    BT = np.stack([_bivar_power_stack(model.pi2, si, m) for si in s])

    # indicator-indicator: counts of one block at two threshold levels
    k = np.arange(m + 1)
    wk = (k + 1) / (2.0 + s[:, None]) ** (k + 2)
    sym = BT + BT.transpose(0, 1, 3, 2)
    t_ind = np.einsum("t,tk,tkab->ab", w, wk, sym)[1:, 1:]

    # indicator-smooth: integration by parts in the smooth coordinate, with
    # the level-mu tail law Pois_k(theta tau) B_{mu/tau}^{*k}(j, 0)
    G = np.zeros((s.size, m + 1, m + 1))
    for kk in range(m + 1):
        for ll in range(1, m + 1):
            G[:, kk, ll] = s ** (ll - 1) * factorial(kk + ll) / (
                factorial(ll - 1) * factorial(kk) * (2.0 + s) ** (kk + ll + 1)
            ) - s**ll * factorial(kk + ll + 1) / (
                factorial(ll) * factorial(kk) * (2.0 + s) ** (kk + ll + 2)
            )
    t_mix = np.einsum("t,tkj,tkl,lp->jp", w, BT[:, :, :, 0], G, M)[1:, 1:]

    # smooth-smooth: shared threshold, fully closed form
    C = np.zeros((m + 1, m + 1))
    for kk in range(1, m + 1):
        for ll in range(1, m + 1):
            C[kk, ll] = factorial(kk + ll) / (
                factorial(kk) * factorial(ll) * 3.0 ** (kk + ll + 1)
            )
    t_zz = np.einsum("kj,lp,kl->jp", M, M, C)[1:, 1:]

    return t_ind + t_mix + t_mix.T + t_zz - 4.0 * np.outer(pbar, pbar)


def sigma_db(model, m, quad=None):
    """Limit covariance of the disjoint-blocks estimates (pbar(1)..pbar(m))."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    quad = quad if quad is not None else QuadratureSpec()
    _require_family(model)
    entries = _refined(quad, lambda n: _sigma_db_entries(model, m, n))
    return CovMatrix(m=m, entries=entries, kind="sigma_db")


# ---------------------------------------------------------------------------
# sliding blocks
# ---------------------------------------------------------------------------

def _sigma_sb_entries(model, m, nodes):
    """Entries d(j, j') for the sliding-blocks scheme.

    For overlap fraction xi, two windows split into an xi-long private piece
    each plus a shared piece; the six cross moments (indicator-indicator,
    two indicator-smooth, smooth-smooth) are assembled from count pmfs of
    the pieces on a (window ratio s) x (threshold u) grid and integrated
    against dH via u = H(tau).
    """
    th = model.theta
    s, sw = gauss_legendre_panels(nodes, model.pi2.breakpoints)
    u, uw = gauss_legendre_01(nodes)
    xi, xiw = gauss_legendre_01(nodes)
    tau = -np.log1p(-u) / th

    M = _conv_power_matrix(model.pi, m)
    pbar = pbar_theory(model, m).weights[1:]
    pp = np.outer(pbar, pbar)
    BT = np.stack([_bivar_power_stack(model.pi2, si, m) for si in s])

    lam_st = th * np.outer(s, tau)  # theta * s * tau(u), reused on every axis
    pois_st = _poisson_matrix(lam_st, m)
    # derivative of the count pmf at window length s*tau resp. tau
    gd = th * np.einsum("sul,lv->suv", pois_st[..., :-1] - pois_st[..., 1:], M[1:, 1:])
    pois_t = _poisson_matrix(th * tau, m)
    gd1 = th * np.einsum("ul,lv->uv", pois_t[..., :-1] - pois_t[..., 1:], M[1:, 1:])

    # closed-form tail of the indicator-smooth mu-integral beyond mu = tau
    tail = np.zeros((nodes, m))
    z = 2.0 * th * tau
    for ll in range(1, m + 1):
        coef = gammaincc(ll, z) / 2.0**ll - gammaincc(ll + 1, z) / 2.0 ** (ll + 1)
        tail += np.outer(coef, M[ll, 1 : m + 1])

    acc = np.zeros((m, m))
    for xv, xw in zip(xi, xiw):
        pois_x = _poisson_matrix(xv * lam_st, m)      # private piece, len xi*s*tau
        pois_y = _poisson_matrix(xv * th * tau, m)    # private piece, len xi*tau
        pois_s = _poisson_matrix((1 - xv) * th * tau, m)  # shared piece rate

        # indicator-indicator: both windows at their own thresholds
        p_x = np.einsum("suk,kl->sul", pois_x, M)
        p_y = np.einsum("uk,kv->uv", pois_y, M)
        p2 = np.einsum("uk,skrx->surx", pois_s, BT)
        py_sh = _shift_gather(p_y, m)
        R = np.einsum("surx,upr->suxp", p2, py_sh)
        px_sh = _shift_gather(p_x, m)
        J = np.einsum("sujx,suxp->sujp", px_sh, R)
        wA = th * tau * np.exp(-lam_st)
        JJ = J + J.transpose(0, 1, 3, 2)
        a_term = np.einsum("s,u,su,sujp->jp", sw, uw, wA, JJ)[1:, 1:] - pp

        # indicator-smooth: level-mu coupling below tau plus closed-form tail
        p20 = np.einsum("uk,sky->suy", pois_s, BT[:, :, :, 0])
        p20_sh = _shift_gather(p20, m)
        ux = np.exp(-xv * lam_st)[..., None] * np.einsum("ul,sujl->suj", p_y, p20_sh)
        inner1 = np.einsum("s,u,u,suv,suj->jv", sw, uw, tau, gd, ux)[1:, :]
        inner2 = np.einsum("u,uj,uv->jv", uw, p_y, tail)[1:, :]
        b_term = inner1 + inner2 - pp

        # smooth-smooth: bivariate exponential survival of the two thresholds
        innerC = np.einsum("s,sua,su->ua", sw, gd, np.exp(-xv * lam_st))
        ecc = np.einsum("u,ub,u,ua->ab", uw, gd1, tau / th, innerC)
        c_term = ecc + ecc.T - pp

        acc += xw * (a_term + b_term + b_term.T + c_term)
    return 2.0 * acc


def sigma_sb(model, m, quad=None):
    """Limit covariance of the sliding-blocks estimates (pbar(1)..pbar(m))."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    quad = quad if quad is not None else QuadratureSpec()
    _require_family(model)
    entries = _refined(quad, lambda n: _sigma_sb_entries(model, m, n))
    return CovMatrix(m=m, entries=entries, kind="sigma_sb")


# ---------------------------------------------------------------------------
# propagation to pi and theta
# ---------------------------------------------------------------------------

def recursion_matrix(pi, pbar, m):
    """Linear map A with (v_1..v_m) = A (s_1..s_m) for the inversion recursion.

    Row j encodes v_j = 4 s_j - 2 sum_{k<j} pi(j-k) s_k
    - 2 sum_{k<j} pbar(j-k) v_k, unrolled to an explicit lower-triangular
    matrix.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    A = np.zeros((m, m))
    for j in range(1, m + 1):
        row = np.zeros(m)
        row[j - 1] = 4.0
        for k in range(1, j):
            row[k - 1] -= 2.0 * pi[j - k]
            row -= 2.0 * pbar[j - k] * A[k - 1]
        A[j - 1] = row
    return A


def gamma(sigma, A):
    """Covariance A Sigma A^T of the recursion-propagated estimates."""
    A = np.asarray(A, dtype=float)
    if A.shape != (sigma.m, sigma.m):
        raise ValueError(
            f"dimension mismatch: matrix is {A.shape}, covariance is m={sigma.m}"
        )
    kind = {"sigma_db": "gamma_db", "sigma_sb": "gamma_sb"}.get(sigma.kind)
    if kind is None:
        raise ValueError(f"gamma needs a sigma_db or sigma_sb input, got {sigma.kind}")
    ent = A @ sigma.entries @ A.T
    ent = 0.5 * (ent + ent.T)
    return CovMatrix(m=sigma.m, entries=ent, kind=kind)


def theta_asymp_var(gamma_cov, pi, m=None):
    """Limit variance {sum j pi(j)}^{-4} (1..m) Gamma (1..m)^T of theta-hat."""
    m = gamma_cov.m if m is None else m
    if not 1 <= m <= gamma_cov.m:
        raise ValueError(f"m must lie in 1..{gamma_cov.m}, got {m}")
    denom = float(sum(j * pi[j] for j in range(1, m + 1)))
    if denom <= 0:
        raise ValueError("sum of j*pi(j) vanishes; theta variance undefined")
    j = np.arange(1, m + 1, dtype=float)
    return float(j @ gamma_cov.entries[:m, :m] @ j) / denom**4


# ---------------------------------------------------------------------------
# comparators
# ---------------------------------------------------------------------------

def mu2_robert(tau):
    """Closed-form variance e^tau (tau + (1-tau)^2 - e^{-tau}) of the
    multilevel-threshold estimator at block-scale tau."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    return float(np.exp(tau) * (tau + (1.0 - tau) ** 2 - np.exp(-tau)))


def robert_crossover(variance, bracket=(1e-8, 50.0)):
    """Block-scale tau at which mu2_robert first exceeds `variance`.

    mu2_robert is strictly increasing, so the crossing is unique.
    """
    lo, hi = bracket
    if not mu2_robert(lo) < variance < mu2_robert(hi):
        raise ValueError(f"variance {variance:g} is not bracketed by {bracket}")
    return float(brentq(lambda t: mu2_robert(t) - variance, lo, hi, xtol=1e-12))


def disjoint_process_var(model, tau, j):
    """Variance p(1 - p) of the disjoint-blocks empirical process at (tau, j)."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    p = float(cpp_pmf(model, tau, j)[j]) if tau > 0 else float(j == 0)
    return p * (1.0 - p)


def sliding_process_cov(model, tau, tau_prime, j, j_prime, quad=None):
    """Limit covariance of the sliding-blocks empirical process at
    ((tau, j), (tau_prime, j_prime)), for 0 <= tau <= tau_prime.

    Two unit-length windows at lag xi are split into private and shared
    pieces; the joint count pmf is integrated over xi in (0, 1).
    """
    if not 0 <= tau <= tau_prime:
        raise ValueError(f"need 0 <= tau <= tau_prime, got ({tau}, {tau_prime})")
    if j < 0 or j_prime < 0:
        raise ValueError("counts must be >= 0")
    quad = quad if quad is not None else QuadratureSpec()
    _require_family(model)
    if tau_prime == 0:
        return 0.0

    th = model.theta
    m = max(j, j_prime, 1)
    M = _conv_power_matrix(model.pi, m)
    BT = _bivar_power_stack(model.pi2, tau / tau_prime, m)

    def evaluate(nodes):
        xi, xiw = gauss_legendre_01(nodes)
        p_x = np.einsum("ek,kl->el", _poisson_matrix(th * xi * tau, m), M)
        p_y = np.einsum("ek,kv->ev", _poisson_matrix(th * xi * tau_prime, m), M)
        p2 = np.einsum("ek,krx->erx", _poisson_matrix(th * (1 - xi) * tau_prime, m), BT)
        R = np.einsum("erx,epr->exp", p2, _shift_gather(p_y, m))
        J = np.einsum("ejx,exp->ejp", _shift_gather(p_x, m), R)
        return np.einsum("e,ejp->jp", xiw, J)[j, j_prime]

    overlap = _refined(quad, evaluate)
    pj = float(cpp_pmf(model, tau, j)[j]) if tau > 0 else float(j == 0)
    pjp = float(cpp_pmf(model, tau_prime, j_prime)[j_prime])
    return float(2.0 * overlap - 2.0 * pj * pjp)
