"""Shared fixtures.

The scaled Monte Carlo runs and the iid covariance matrices are expensive,
so they are computed once per session and shared between the module tests
and the acceptance suite.  The terminal-summary hook prints one PASS/FAIL
line per acceptance criterion at the end of the run.
"""
import pytest

from exclust.asymptotics import sigma_db, sigma_sb
from exclust.cpmodel import iid_model
from exclust.experiments import ExperimentConfig, run

MC_SEED = 20260814
MC_REPS = 100

REFERENCE_MODELS = (("armax", 0.5), ("sqarch", 0.5), ("ar_uniform", 4))


@pytest.fixture(scope="session")
def mc_tables():
    """N=100 benchmark tables for the three reference models, all estimators."""
    out = {}
    for kind, param in REFERENCE_MODELS:
        cfg = ExperimentConfig(kind, param, reps=MC_REPS, master_seed=MC_SEED)
        out[kind] = run(cfg, workers=1)
    return out


@pytest.fixture(scope="session")
def iid_covs():
    """{m: (sigma_db, sigma_sb)} for the iid model at the default quadrature."""
    model = iid_model()
    return {m: (sigma_db(model, m), sigma_sb(model, m)) for m in (1, 2, 3)}


_ACCEPT = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.name.startswith("test_criterion_"):
        _ACCEPT[item.name] = rep.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPT:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_ACCEPT):
        terminalreporter.write_line(f"{name}: {_ACCEPT[name].upper()}")
