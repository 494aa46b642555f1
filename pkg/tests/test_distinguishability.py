import itertools
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ergostat.correlation import GaussBump, Identity, Indicator, One
from ergostat.distinguishability import (BOTH, BRUTEFORCE, CLOSED, RAW, STANDARDIZED, bound_check, diagonal_peak_sq,
                                         f_bruteforce, f_closed, f_curve, standardized_difference, standardized_scale)
from ergostat.errors import InvalidArgumentError
from ergostat.model import MacroPoint, ModelConfig

mp.mp.dps = 40


def closed_oracle(r):
    a = mp.mpf(abs(r))
    return a * (mp.sqrt(1 - a * a) * (1 + a)) ** (-1 - 1 / a)


def diagonal_value(r):
    """Standardized difference at the diagonal stationary point, in extended precision."""
    a = mp.mpf(abs(r))
    t2 = (1 + a) / a * mp.log(mp.sqrt(1 - a * a) * (1 + a))
    return mp.exp(-t2 / (1 + a)) / (2 * mp.pi * mp.sqrt(1 - a * a)) - mp.exp(-t2) / (2 * mp.pi)


def origin_value(r):
    return (1 / mp.sqrt(1 - mp.mpf(r) ** 2) - 1) / (2 * mp.pi)


def test_closed_form_examples():
    assert f_closed(0.0) == 0.0
    assert f_closed(0.5) == pytest.approx(0.5 * (math.sqrt(0.75) * 1.5) ** -3, rel=1e-15)
    assert f_closed(0.5) == pytest.approx(0.22809, abs=1e-5)
    assert f_closed(0.99) == pytest.approx(12.72474, abs=1e-5)
    for r in (1.0, -1.0, 1.5):
        with pytest.raises(InvalidArgumentError):
            f_closed(r)


@pytest.mark.parametrize("r", [1e-6, 0.01, 0.1, 0.5, 0.9, 0.99, -0.3, 1 - 1e-6])
def test_closed_form_against_extended_precision(r):
    assert f_closed(r) == pytest.approx(float(closed_oracle(r)), rel=1e-11)


def test_closed_form_small_r_slope():
    for r in (1e-4, 1e-3):
        assert f_closed(r) / r == pytest.approx(math.exp(-1) * (1 + 2 * r * r / 3), rel=1e-6)


def test_bruteforce_zero():
    assert f_bruteforce(0.0).F_bruteforce < 1e-12


def test_bruteforce_half():
    res = f_bruteforce(0.5)
    assert res.F_bruteforce == pytest.approx(float(diagonal_value(0.5)), rel=1e-10)
    assert res.F_bruteforce == pytest.approx(0.22809 / (2 * math.pi), abs=1e-6)
    assert res.convention_ratio == pytest.approx(2 * math.pi, rel=1e-9)
    a1, a2 = res.argmax
    assert abs(a1 - a2) < 1e-6
    assert abs(a1) == pytest.approx(0.886, abs=1e-3)


def test_bruteforce_negative_r_uses_antidiagonal():
    pos, neg = f_bruteforce(0.5), f_bruteforce(-0.5)
    assert neg.F_bruteforce == pytest.approx(pos.F_bruteforce, abs=1e-12)
    assert abs(neg.argmax[0] + neg.argmax[1]) < 1e-6


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
def test_evenness(r):
    assert abs(f_bruteforce(r).F_bruteforce - f_bruteforce(-r).F_bruteforce) < 1e-9
    assert f_closed(r) == f_closed(-r)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5, 0.7, 0.8, 0.85, 0.9, 0.95, 0.99])
def test_bruteforce_is_larger_of_two_stationary_values(r):
    # the sup sits either at the diagonal point (t, t) or at the origin
    candidates = [origin_value(r)]
    if diagonal_peak_sq(r) > 0:
        candidates.append(diagonal_value(r))
    assert f_bruteforce(r).F_bruteforce == pytest.approx(float(max(candidates)), rel=1e-9)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5, 0.7])
def test_argmax_on_diagonal(r):
    res = f_bruteforce(r)
    a1, a2 = res.argmax
    assert abs(a1 - a2) < 1e-6
    assert a1 * a2 == pytest.approx(diagonal_peak_sq(r), abs=1e-6)


def test_ratio_constant_where_diagonal_peak_dominates():
    ratios = [f_bruteforce(r).convention_ratio for r in (0.1, -0.1, 0.3, -0.3, 0.5, -0.5, 0.7, -0.7, 0.8, -0.8)]
    assert max(ratios) - min(ratios) < 1e-3 * np.median(ratios)
    assert np.median(ratios) == pytest.approx(2 * math.pi, rel=1e-6)


def test_ratio_departs_from_constant_at_strong_correlation():
    # beyond |r| ~ 0.84 the origin value exceeds the diagonal one and the closed form no longer tracks the sup
    assert f_bruteforce(0.9).convention_ratio / (2 * math.pi) == pytest.approx(1.035, abs=2e-3)
    assert diagonal_peak_sq(0.9) < 0


def test_raw_scaling_matches_standardized():
    std = f_bruteforce(0.6).F_bruteforce
    for mu, sigma, Sigma in itertools.product([-2.0, 0.0, 3.0], [0.5, 1.0, 2.0], [0.7, 1.0, 1.5]):
        th = MacroPoint(mu, sigma)
        raw = f_bruteforce(0.6, RAW, th, Sigma)
        assert raw.F_bruteforce * standardized_scale(th, Sigma) == pytest.approx(std, rel=1e-6)
        assert raw.coordinates == RAW


def test_standardized_independent_of_model_parameters():
    a = f_bruteforce(0.4, STANDARDIZED, MacroPoint(0, 1), 1.0)
    b = f_bruteforce(0.4, STANDARDIZED, MacroPoint(5, 3), 0.2)
    assert a == b


def test_bruteforce_rejects():
    with pytest.raises(InvalidArgumentError):
        f_bruteforce(1.0)
    with pytest.raises(InvalidArgumentError):
        f_bruteforce(0.5, "polar")


@settings(max_examples=40, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6), st.floats(-0.95, 0.95))
def test_standardized_difference_bounded_by_bruteforce(a1, a2, r):
    # sampled values never exceed the reported sup
    r = round(r, 2)
    v = abs(float(standardized_difference(np.array([a1, a2]), r)))
    assert v <= f_bruteforce(r).F_bruteforce + 1e-15


def test_curve_closed():
    rows = f_curve(-0.99, 0.99, 199)
    assert len(rows) == 199
    F = np.array([row.F_closed_paper for row in rows])
    assert np.allclose(F, F[::-1], rtol=1e-14)
    assert F[99] == 0.0
    assert F[0] > 12 and F[-1] > 12
    assert np.all(np.diff(F[99:]) > 0)
    assert all(math.isnan(row.F_bruteforce) for row in rows)


def test_curve_both():
    rows = f_curve(-0.8, 0.8, 9, BOTH)
    ratios = np.array([row.convention_ratio for row in rows])
    finite = ratios[np.isfinite(ratios)]
    assert len(finite) == 8  # r = 0 has 0/0
    assert np.all(np.abs(finite - np.median(finite)) < 1e-3)
    rows = f_curve(0.1, 0.3, 3, BRUTEFORCE)
    assert all(math.isnan(row.F_closed_paper) for row in rows)


def test_curve_rejects():
    with pytest.raises(InvalidArgumentError):
        f_curve(-0.5, 0.5, 1)
    with pytest.raises(InvalidArgumentError):
        f_curve(0.5, -0.5, 5)
    with pytest.raises(InvalidArgumentError):
        f_curve(-1.0, 0.5, 5)
    with pytest.raises(InvalidArgumentError):
        f_curve(-0.5, 0.5, 5, "spline")


TH = MacroPoint(0.0, 1.0)


def test_bound_check_examples():
    bumps = [GaussBump(v, 0.0, 1.0) for v in (1, 2, 3, 4)]
    rep = bound_check(bumps, TH, ModelConfig(), [0.0], resolution=9)[0]
    assert rep.abs_C < 1e-12 and rep.F_raw < 1e-12
    assert rep.satisfied_product_norms and rep.satisfied_paper_norms

    inds = [Indicator(v, -1.0, 1.0) for v in (1, 2, 3, 4)]
    rep = bound_check(inds, TH, ModelConfig(), [0.5], resolution=9)[0]
    assert rep.abs_C > 0
    assert rep.bound_product_norms == pytest.approx(16 * rep.F_raw)
    assert rep.bound_paper_norms == pytest.approx(2 * rep.F_raw)
    assert rep.satisfied_product_norms
    assert "1[-1<=h11<=1]" in rep.battery


def test_bound_check_rejects():
    with pytest.raises(InvalidArgumentError, match="infinite 1-norm"):
        bound_check([One(v) for v in (1, 2, 3, 4)], TH, ModelConfig(), [0.5])
    with pytest.raises(InvalidArgumentError, match="h11"):
        bound_check([Identity(1)] + [GaussBump(v, 0, 1) for v in (2, 3, 4)], TH, ModelConfig(), [0.5])
    with pytest.raises(InvalidArgumentError):
        bound_check([GaussBump(v, 0, 1) for v in (1, 2, 3)], TH, ModelConfig(), [0.5])
    with pytest.raises(InvalidArgumentError):
        bound_check([GaussBump(v, 0, 1) for v in (1, 2, 3, 4)], TH, ModelConfig(symmetric=True), [0.5])
