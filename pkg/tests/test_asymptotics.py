"""Limit covariance matrices, the recursion propagation and comparators.

Two independent oracles guard the covariance integrals: a literal 2-d
quadrature built only on the bivariate count pmfs (slow route, no shared
code with the production evaluator beyond cpmodel), and closed-form
integrands derived by hand for the iid model at m=1.
"""
import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from exclust.asymptotics import (
    CovMatrix,
    QuadratureSpec,
    cpp_pmf_dtau,
    disjoint_process_var,
    gamma,
    mu2_robert,
    recursion_matrix,
    robert_crossover,
    sigma_db,
    sigma_sb,
    sliding_process_cov,
    theta_asymp_var,
)
from exclust.cpmodel import (
    CppModel,
    cpp2_pmf,
    cpp_pmf,
    gauss_legendre_01,
    gauss_legendre_panels,
    geometric_pi,
    iid_model,
    max_ar_family,
    pbar_theory,
)
from exclust.errors import NumericFailureError, UnsupportedModelError

GEOM = CppModel(0.5, geometric_pi(0.5), max_ar_family(0.5))

FAST = QuadratureSpec(nodes_1d=32, refinement=False)


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def literal_sigma_db(model, m, nodes=48):
    """Direct 2-d quadrature of the disjoint-blocks covariance.

    Integrates the pairwise joint laws against dH x dH' literally: the
    indicator-indicator term over nested levels, the mixed term against the
    analytic level-density of the second block, and the own-level term, all
    using only cpp_pmf / cpp2_pmf / cpp_pmf_dtau.  The level-ratio axis is
    split at the family's breakpoints.
    """
    th = model.theta
    u, wu = gauss_legendre_01(nodes)
    s, ws = gauss_legendre_panels(nodes, model.pi2.breakpoints)
    pbar = pbar_theory(model, m).weights[1:]

    t_zz = np.zeros((m, m))
    for ui, wi in zip(u, wu):
        z = -np.log1p(-ui) / th
        p = cpp_pmf(model, z, m).weights[1:]
        t_zz += wi * np.outer(p, p)

    t_ind = np.zeros((m, m))
    t_mix = np.zeros((m, m))
    for ui, wi in zip(u, wu):
        t = -np.log1p(-ui) / th
        for si, wsi in zip(s, ws):
            tp = si * t
            tab = cpp2_pmf(model, t, tp, m)
            blk = tab[1:, 1:]
            t_ind += wi * wsi * th * t * np.exp(-th * tp) * (blk + blk.T)
            dp = cpp_pmf_dtau(model, tp, m)[1:]
            t_mix += wi * wsi * t * np.outer(tab[1:, 0], dp)

    return t_ind + t_mix + t_mix.T + t_zz - 4.0 * np.outer(pbar, pbar)


def hand_sliding_integrand_iid(xv):
    """Hand-reduced xi-integrand of the iid m=1 sliding-blocks covariance.

    Sum of the indicator-indicator, two mixed and own-level contributions,
    each already centered; obtained by evaluating the joint laws of two
    unit windows at lag xi in closed form and integrating the level pair
    analytically.
    """
    a = 3.0 + xv
    c = 1.0 + xv
    ind = (1 - xv) / (2 * a * a) + xv * xv * (1 / a**3 + 1 / (4 * a * a)) \
        + xv * (1 - xv) / (4 * a * a)
    ind = 2 * ind - 1 / 16
    mix = (0.25 * (1 / a - 1 / a**2) + (xv / 2) * (1 / a**2 - 2 / a**3)
           + xv * (1 / (4 * a * a) - 1 / a**3) - 1 / 16)
    own = 2 * ((1 / c - 1 / c**2) * 0.25 - xv / c**2 * (1 / a - 1 / a**2)
               + (1 / c) * (1 / a**2 - 2 / a**3)) - 1 / 16
    # lag runs over (-1, 1) and the combined integrand is even in the lag
    return 2 * (ind + 2 * mix + own)


# ---------------------------------------------------------------------------
# spec and matrix containers
# ---------------------------------------------------------------------------

def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(nodes_1d=4)
    with pytest.raises(ValueError):
        QuadratureSpec(tolerance=0.0)
    spec = QuadratureSpec()
    assert spec.nodes_1d == 64 and spec.refinement


def test_cov_matrix_validation():
    good = np.array([[1.0, 0.2], [0.2, 0.5]])
    CovMatrix(2, good, "sigma_db")
    with pytest.raises(ValueError):
        CovMatrix(2, good, "covariance")
    with pytest.raises(ValueError):
        CovMatrix(3, good, "sigma_db")
    with pytest.raises(ValueError):
        CovMatrix(2, np.array([[1.0, 0.3], [0.2, 0.5]]), "sigma_db")
    with pytest.raises(ValueError):
        CovMatrix(2, np.array([[-1.0, 0.0], [0.0, 0.5]]), "sigma_db")


def test_models_without_family_are_rejected():
    bare = CppModel(0.5, geometric_pi(0.5))
    with pytest.raises(UnsupportedModelError):
        sigma_db(bare, 1, FAST)
    with pytest.raises(UnsupportedModelError):
        sigma_sb(bare, 1, FAST)


def test_truncated_pi_is_rejected():
    short = geometric_pi(0.9, m_max=5)  # 0.59 of the mass cut off
    model = CppModel(0.1, short, max_ar_family(0.9))
    with pytest.raises(ValueError):
        sigma_db(model, 1, FAST)


# ---------------------------------------------------------------------------
# derivative and disjoint covariance
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("model", [iid_model(), GEOM])
@pytest.mark.parametrize("mu", [0.2, 1.0, 3.0])
def test_cpp_pmf_dtau_matches_finite_differences(model, mu):
    h = 1e-5
    up = cpp_pmf(model, mu + h, 5).weights
    dn = cpp_pmf(model, mu - h, 5).weights
    np.testing.assert_allclose(cpp_pmf_dtau(model, mu, 5), (up - dn) / (2 * h),
                               atol=1e-6)


def test_sigma_db_iid_constant(iid_covs):
    db1, _ = iid_covs[1]
    assert db1.kind == "sigma_db"
    np.testing.assert_allclose(db1.entries[0, 0], 5 / 108, atol=1e-10)


def test_sigma_db_matches_literal_quadrature_iid():
    got = sigma_db(iid_model(), 2, FAST).entries
    ref = literal_sigma_db(iid_model(), 2)
    np.testing.assert_allclose(got, ref, atol=1e-6)


def test_sigma_db_matches_literal_quadrature_geometric():
    got = sigma_db(GEOM, 2, FAST).entries
    # 24 nodes per panel suffice: the ratio axis is subdivided at the
    # family breakpoints, so each panel is smooth
    ref = literal_sigma_db(GEOM, 2, nodes=24)
    np.testing.assert_allclose(got, ref, atol=1e-6)


def test_sigma_db_symmetry(iid_covs):
    db3, _ = iid_covs[3]
    assert np.max(np.abs(db3.entries - db3.entries.T)) < 1e-10
    g = sigma_db(GEOM, 3, FAST).entries
    assert np.max(np.abs(g - g.T)) < 1e-10


def test_sigma_db_embeds_smaller_m(iid_covs):
    # the (j, j') entry does not depend on the matrix size
    db1, _ = iid_covs[1]
    db3, _ = iid_covs[3]
    np.testing.assert_allclose(db3.entries[:1, :1], db1.entries, atol=1e-12)


# ---------------------------------------------------------------------------
# sliding covariance
# ---------------------------------------------------------------------------

def test_sigma_sb_iid_constant(iid_covs):
    _, sb1 = iid_covs[1]
    assert sb1.kind == "sigma_sb"
    assert abs(16 * sb1.entries[0, 0] - 0.3790) < 5e-4


def test_sigma_sb_matches_hand_integrand(iid_covs):
    _, sb1 = iid_covs[1]
    hand, err = scipy_quad(hand_sliding_integrand_iid, 0.0, 1.0, epsabs=1e-12)
    assert err < 1e-10
    np.testing.assert_allclose(hand, 0.023678801836469643, atol=1e-12)
    np.testing.assert_allclose(sb1.entries[0, 0], hand, atol=1e-7)


def test_sigma_sb_symmetry(iid_covs):
    _, sb3 = iid_covs[3]
    assert np.max(np.abs(sb3.entries - sb3.entries.T)) < 1e-10


@pytest.mark.parametrize("m", [1, 2, 3])
def test_loewner_ordering_iid(iid_covs, m):
    db, sb = iid_covs[m]
    eig = np.linalg.eigvalsh(db.entries - sb.entries)
    assert eig.min() >= -1e-6


def test_loewner_ordering_geometric():
    db = sigma_db(GEOM, 2, FAST).entries
    sb = sigma_sb(GEOM, 2, FAST).entries
    assert np.linalg.eigvalsh(db - sb).min() >= -1e-6


def test_refinement_returns_the_fine_grid():
    coarse_spec = QuadratureSpec(nodes_1d=16, refinement=True, tolerance=1e-2)
    fine_spec = QuadratureSpec(nodes_1d=32, refinement=False)
    a = sigma_db(iid_model(), 1, coarse_spec).entries
    b = sigma_db(iid_model(), 1, fine_spec).entries
    np.testing.assert_array_equal(a, b)


def test_refinement_failure_raises_with_delta():
    spec = QuadratureSpec(nodes_1d=8, refinement=True, tolerance=1e-12)
    with pytest.raises(NumericFailureError) as exc:
        sigma_sb(iid_model(), 1, spec)
    assert exc.value.delta is not None and exc.value.delta > 0


# ---------------------------------------------------------------------------
# recursion propagation
# ---------------------------------------------------------------------------

def _recursive_v(pi, pbar, s):
    v = np.zeros(len(s))
    for j in range(1, len(s) + 1):
        acc = 4.0 * s[j - 1]
        for k in range(1, j):
            acc -= 2.0 * pi[j - k] * s[k - 1]
            acc -= 2.0 * pbar[j - k] * v[k - 1]
        v[j - 1] = acc
    return v


def test_recursion_matrix_m1():
    A = recursion_matrix(geometric_pi(0.5), pbar_theory(GEOM, 1), 1)
    np.testing.assert_array_equal(A, [[4.0]])


def test_recursion_matrix_is_lower_triangular():
    A = recursion_matrix(geometric_pi(0.5), pbar_theory(GEOM, 5), 5)
    assert np.all(A[np.triu_indices(5, k=1)] == 0.0)
    assert np.all(np.diag(A) == 4.0)


def test_recursion_matrix_matches_recursive_evaluation():
    pi = geometric_pi(0.5)
    pbar = pbar_theory(GEOM, 5)
    A = recursion_matrix(pi, pbar, 5)
    rng = np.random.default_rng(17)
    for _ in range(20):
        s = rng.normal(size=5)
        np.testing.assert_allclose(A @ s, _recursive_v(pi, pbar, s), atol=1e-12)


def test_recursion_matrix_is_jacobian_of_pi_from_pbar():
    from exclust.estimators import pi_from_pbar

    class Holder:
        def __init__(self, values):
            self.values = values
            self.mode, self.scale, self.b = "sliding", "z", 2

    pbar = pbar_theory(GEOM, 4)
    A = recursion_matrix(geometric_pi(0.5), pbar, 4)
    base = pbar.weights[1:5].copy()
    h = 1e-6
    for k in range(4):
        up, dn = base.copy(), base.copy()
        up[k] += h
        dn[k] -= h
        col = (pi_from_pbar(Holder(up)).values - pi_from_pbar(Holder(dn)).values) / (2 * h)
        np.testing.assert_allclose(col, A[:, k], atol=1e-8)


def test_gamma_propagation(iid_covs):
    db1, sb1 = iid_covs[1]
    A = recursion_matrix(geometric_pi(0.0), pbar_theory(iid_model(), 1), 1)
    g_db = gamma(db1, A)
    assert g_db.kind == "gamma_db"
    assert abs(g_db.entries[0, 0] - 20 / 27) < 4e-4
    g_sb = gamma(sb1, A)
    assert g_sb.kind == "gamma_sb"
    assert abs(g_sb.entries[0, 0] - 0.3790) < 5e-4


def test_gamma_dimension_mismatch(iid_covs):
    db1, _ = iid_covs[1]
    with pytest.raises(ValueError):
        gamma(db1, np.eye(2))


def test_gamma_rejects_gamma_input(iid_covs):
    db1, _ = iid_covs[1]
    A = np.eye(1) * 4
    with pytest.raises(ValueError):
        gamma(gamma(db1, A), A)


def test_gamma_is_psd(iid_covs):
    db3, sb3 = iid_covs[3]
    pi = geometric_pi(0.0)
    A = recursion_matrix(pi, pbar_theory(iid_model(), 3), 3)
    for cov in (gamma(db3, A), gamma(sb3, A)):
        assert np.linalg.eigvalsh(cov.entries).min() >= -1e-8


def test_theta_asymp_var(iid_covs):
    db1, sb1 = iid_covs[1]
    pi = geometric_pi(0.0)
    A = recursion_matrix(pi, pbar_theory(iid_model(), 1), 1)
    assert abs(theta_asymp_var(gamma(db1, A), pi) - 20 / 27) < 4e-4
    assert abs(theta_asymp_var(gamma(sb1, A), pi) - 0.3790) < 5e-4


def test_theta_asymp_var_scaling(iid_covs):
    db3, _ = iid_covs[3]
    pi = geometric_pi(0.5)
    A = recursion_matrix(pi, pbar_theory(GEOM, 3), 3)
    g = gamma(db3, A)
    scaled = CovMatrix(3, 7.0 * g.entries, "gamma_db")
    np.testing.assert_allclose(
        theta_asymp_var(scaled, pi), 7.0 * theta_asymp_var(g, pi), rtol=1e-12
    )


def test_theta_asymp_var_zero_denominator(iid_covs):
    db1, _ = iid_covs[1]
    A = recursion_matrix(geometric_pi(0.0), pbar_theory(iid_model(), 1), 1)
    g = gamma(db1, A)
    from exclust.cpmodel import Pmf

    with pytest.raises(ValueError):
        theta_asymp_var(g, Pmf(np.array([0.0, 0.0])))


# ---------------------------------------------------------------------------
# comparators
# ---------------------------------------------------------------------------

def test_mu2_robert_closed_form():
    np.testing.assert_allclose(mu2_robert(1.0), np.e - 1.0, rtol=1e-14)
    assert abs(mu2_robert(0.7573) - 20 / 27) < 1e-3
    with pytest.raises(ValueError):
        mu2_robert(0.0)


def test_mu2_robert_strictly_increasing():
    grid = np.linspace(0.1, 3.0, 60)
    vals = [mu2_robert(t) for t in grid]
    assert np.all(np.diff(vals) > 0)


def test_robert_crossover():
    t = robert_crossover(20 / 27)
    assert abs(t - 0.7573) < 1e-3
    np.testing.assert_allclose(mu2_robert(t), 20 / 27, atol=1e-10)
    with pytest.raises(ValueError):
        robert_crossover(-1.0)


def test_disjoint_process_var_closed_forms():
    model = iid_model()
    np.testing.assert_allclose(
        disjoint_process_var(model, 1.0, 1), np.exp(-1) - np.exp(-2), rtol=1e-13
    )
    p2 = np.exp(-1) / 2
    np.testing.assert_allclose(
        disjoint_process_var(model, 1.0, 2), p2 * (1 - p2), rtol=1e-13
    )


def test_sliding_process_cov_iid_constants():
    model = iid_model()
    c11 = sliding_process_cov(model, 1.0, 1.0, 1, 1)
    np.testing.assert_allclose(c11, 2 * np.exp(-2) * (2 * np.e - 5), atol=1e-9)
    c22 = sliding_process_cov(model, 1.0, 1.0, 2, 2)
    np.testing.assert_allclose(c22, np.exp(-2) * (5 * np.e - 13), atol=1e-9)


def test_sliding_process_cov_beats_disjoint_at_tau_one():
    model = iid_model()
    for j in (1, 2):
        assert sliding_process_cov(model, 1.0, 1.0, j, j) < disjoint_process_var(
            model, 1.0, j
        )


def test_sliding_process_cov_symmetric_at_equal_levels():
    a = sliding_process_cov(GEOM, 1.0, 1.0, 1, 2, FAST)
    b = sliding_process_cov(GEOM, 1.0, 1.0, 2, 1, FAST)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_sliding_process_cov_argument_checks():
    with pytest.raises(ValueError):
        sliding_process_cov(iid_model(), 2.0, 1.0, 1, 1)
    assert sliding_process_cov(iid_model(), 0.0, 0.0, 1, 1) == 0.0
