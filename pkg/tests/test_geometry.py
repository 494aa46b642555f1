import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergostat.errors import InvalidArgumentError, NumericalDomainError
from ergostat.geometry import (ANALYTIC, FINITE_DIFFERENCE, MetricTensor, christoffel, christoffel_from_metric,
                               fisher_metric_analytic, fisher_metric_numeric, geometry_report, paper_literal_metric,
                               ricci, ricci_from_christoffel)
from ergostat.model import Block, MacroPoint, ModelConfig

SIGMAS = [0.5, 1.0, 2.0, 5.0]
RS = [0.0, 0.3, -0.3, 0.9, -0.9]


def test_metric_examples():
    g = fisher_metric_numeric(MacroPoint(0, 1), ModelConfig(1.7, 0.0))
    assert np.allclose(g.matrix, np.diag([1.0, 4.0]), atol=1e-8)
    g = fisher_metric_numeric(MacroPoint(0, 2), ModelConfig(1.0, 0.0))
    assert np.allclose(g.matrix, np.diag([0.25, 1.0]), atol=1e-8)
    g = fisher_metric_analytic(MacroPoint(0, 1), ModelConfig(1.0, 0.6))
    assert np.allclose(g.matrix, np.diag([1.5625, 6.25]), rtol=1e-15)


@pytest.mark.parametrize("symmetric,g22", [(False, 8.0), (True, 6.0)])
def test_full_block_adds_offdiagonal_information(symmetric, g22):
    # h12, h21 each contribute 2/sigma^2; with h21 = h12 only one does
    g = fisher_metric_numeric(MacroPoint(0, 1), ModelConfig(1.0, 0.0, symmetric), Block.FULL)
    assert g.g11 == pytest.approx(1.0, abs=1e-8)
    assert g.g22 == pytest.approx(g22, abs=1e-8)


@pytest.mark.parametrize("sigma,r", list(itertools.product(SIGMAS, RS)))
def test_numeric_matches_analytic(sigma, r):
    th, cfg = MacroPoint(0.7, sigma), ModelConfig(1.3, r)
    diff = fisher_metric_numeric(th, cfg).matrix - fisher_metric_analytic(th, cfg).matrix
    assert np.max(np.abs(diff)) < 1e-8


def test_offdiagonal_vanishes_on_grid():
    for mu, sigma, r in itertools.product([-3, -1, 0, 2, 7], [0.3, 0.5, 1, 2, 5], [-0.9, -0.4, 0, 0.4, 0.9]):
        assert fisher_metric_analytic(MacroPoint(mu, sigma), ModelConfig(1.0, r)).g12 == 0.0


def test_sigma_denominator_variant_only_agrees_at_unit_sigma():
    cfg = ModelConfig(1.0, 0.3)
    a = paper_literal_metric(MacroPoint(0, 1), cfg).matrix
    assert np.allclose(a, fisher_metric_analytic(MacroPoint(0, 1), cfg).matrix, rtol=1e-15)
    b = paper_literal_metric(MacroPoint(0, 2), cfg).matrix
    assert not np.allclose(b, fisher_metric_numeric(MacroPoint(0, 2), cfg).matrix, rtol=1e-3)


def test_metric_rejects_indefinite():
    with pytest.raises(InvalidArgumentError):
        MetricTensor(MacroPoint(0, 1), 1.0, 2.0, 1.0)


@pytest.mark.parametrize("sigma,expected", [(1.0, (-1.0, 0.25, -1.0)), (2.0, (-0.5, 0.125, -0.5))])
def test_christoffel_values(sigma, expected):
    G = christoffel(MacroPoint(0.0, sigma), ModelConfig())
    assert (G[0, 0, 1], G[1, 0, 0], G[1, 1, 1]) == expected
    assert G[0, 1, 0] == G[0, 0, 1]
    assert G[0, 0, 0] == G[0, 1, 1] == G[1, 0, 1] == 0.0


def test_christoffel_r_independent():
    a = christoffel(MacroPoint(0, 1), ModelConfig(1.0, 0.8), FINITE_DIFFERENCE).gamma
    b = christoffel(MacroPoint(0, 1), ModelConfig(1.0, 0.0), FINITE_DIFFERENCE).gamma
    assert np.allclose(a, b, atol=1e-8)
    assert np.array_equal(christoffel(MacroPoint(0, 1), ModelConfig(1.0, 0.8)).gamma,
                          christoffel(MacroPoint(0, 1), ModelConfig(1.0, 0.0)).gamma)


@pytest.mark.parametrize("sigma,r", list(itertools.product(SIGMAS, RS)))
def test_christoffel_fd_matches_analytic(sigma, r):
    th, cfg = MacroPoint(-1.0, sigma), ModelConfig(1.0, r)
    fd = christoffel(th, cfg, FINITE_DIFFERENCE).gamma
    assert np.allclose(fd, christoffel(th, cfg).gamma, atol=1e-6)
    assert np.array_equal(fd, fd.transpose(0, 2, 1))


def test_ricci_examples():
    rep = ricci(MacroPoint(0, 1), ModelConfig(1.0, 0.0))
    assert rep.R == -0.5
    rep = ricci(MacroPoint(0, 1), ModelConfig(1.0, 0.6))
    assert rep.R == pytest.approx(-0.32, abs=1e-15)
    assert (rep.R11, rep.R22) == (-0.25, -1.0)
    r = 1 - 1e-6
    for s in (r, -r):
        assert ricci(MacroPoint(0, 1), ModelConfig(1.0, s)).R == pytest.approx(-(1 - s * s) / 2, rel=1e-12)


@pytest.mark.parametrize("mu", [-3.0, 0.0, 7.0])
@pytest.mark.parametrize("sigma,r", list(itertools.product(SIGMAS, RS)))
def test_ricci_fd_matches_closed_form(mu, sigma, r):
    rep = ricci(MacroPoint(mu, sigma), ModelConfig(1.0, r), FINITE_DIFFERENCE)
    assert rep.R == pytest.approx(-(1 - r * r) / 2, abs=1e-5)
    assert rep.R11 == pytest.approx(-1 / (4 * sigma**2), abs=1e-5 / sigma**2)
    assert rep.R22 == pytest.approx(-1 / sigma**2, abs=1e-5 / sigma**2)


@settings(max_examples=60, deadline=None)
@given(st.floats(-10, 10), st.floats(0.05, 20), st.floats(-1 + 1e-6, 1 - 1e-6))
def test_curvature_negative_and_bounded(mu, sigma, r):
    R = ricci(MacroPoint(mu, sigma), ModelConfig(1.0, r)).R
    assert -0.5 <= R < 0


def test_isometry_to_hyperbolic_form():
    for mu, sigma, r in itertools.product([-2, 0, 3], [0.2, 1, 4], [-0.7, 0, 0.5]):
        g = fisher_metric_analytic(MacroPoint(mu, sigma), ModelConfig(1.0, r)).matrix
        v = 2 * sigma
        # dsigma = dv / 2 rescales the sigma-sigma entry by 1/4
        g_uv = np.diag([g[0, 0], g[1, 1] / 4])
        assert np.allclose(g_uv, 4 / ((1 - r * r) * v * v) * np.eye(2), rtol=1e-14)


def test_generic_fd_on_hyperbolic_plane():
    metric = lambda p: np.eye(2) / p[1] ** 2
    gamma = lambda p: christoffel_from_metric(metric, p)
    G = gamma(np.array([0.3, 1.5]))
    assert G[1, 0, 0] == pytest.approx(1 / 1.5, abs=1e-6)
    assert G[0, 0, 1] == pytest.approx(-1 / 1.5, abs=1e-6)
    _, R = ricci_from_christoffel(gamma, metric, [0.3, 1.5])
    assert R == pytest.approx(-2.0, abs=1e-5)


def test_fd_on_flat_metric():
    metric = lambda p: np.diag([1.0, 3.0])
    gamma = lambda p: christoffel_from_metric(metric, p)
    ric, R = ricci_from_christoffel(gamma, metric, [1.0, 2.0])
    assert np.allclose(ric, 0, atol=1e-10) and abs(R) < 1e-10


def test_fd_stencil_domain_error():
    th = MacroPoint(0.0, 5e-5)
    with pytest.raises(NumericalDomainError):
        christoffel(th, ModelConfig(), FINITE_DIFFERENCE)
    with pytest.raises(NumericalDomainError):
        ricci(th, ModelConfig(), FINITE_DIFFERENCE)
    with pytest.raises(InvalidArgumentError):
        christoffel(MacroPoint(0, 1), ModelConfig(), "symbolic")


def test_report_contents():
    rep = geometry_report(MacroPoint(0, 2), ModelConfig(1.0, 0.3))
    assert rep["block"] == "bivariate"
    assert rep["ricci"]["R"] == pytest.approx(-(1 - 0.09) / 2)
    assert rep["ricci_fd"]["R"] == pytest.approx(-(1 - 0.09) / 2, abs=1e-5)
    assert rep["paper_literal_max_abs_diff"] > 0.1
    assert "sigma^2" in rep["note"]
    assert rep["christoffel"]["mu_musigma"] == -0.5
    assert np.allclose(rep["g"], rep["g_analytic"], atol=1e-8)
