"""Sup-norm distance F between the joint density and the product of its
marginals: brute-force maximization, the closed form, and the bound on |C|.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .correlation import TestFunction, battery_id, describe, ig_correlation
from .errors import InvalidArgumentError
from .model import R_MAX, MacroPoint, ModelConfig, joint_density, marginal_density, means, stddevs
from .numerics import BoxDomain, maximize

STANDARDIZED = "standardized"
RAW = "raw"
BOX_SD = 8.0
RES_2D = 1200
RES_4D = 25
BOUND_SLACK = 1e-12  # quadrature error allowance when comparing |C| with a bound


def f_closed(r: float) -> float:
    """|r| (sqrt(1 - r^2) (1 + |r|))^(-1 - 1/|r|), extended by 0 at r = 0."""
    a = abs(r)
    if not a < 1:
        raise InvalidArgumentError(f"closed form diverges for |r| >= 1, got r={r}")
    if a == 0:
        return 0.0
    # log of sqrt((1 - a)(1 + a)) (1 + a), without cancellation in 1 - a^2
    log_base = 0.5 * math.log1p(-a) + 1.5 * math.log1p(a)
    return a * math.exp((-1.0 - 1.0 / a) * log_base)


def standardized_difference(pts, r: float):
    """Standard bivariate normal density with correlation r minus phi(a1) phi(a2)."""
    a1, a2 = pts[..., 0], pts[..., 1]
    one_m = 1.0 - r * r
    b = np.exp(-(a1 * a1 - 2 * r * a1 * a2 + a2 * a2) / (2 * one_m)) / (2 * math.pi * math.sqrt(one_m))
    return b - np.exp(-0.5 * (a1 * a1 + a2 * a2)) / (2 * math.pi)


def raw_difference(pts, theta: MacroPoint, cfg: ModelConfig):
    """Joint density minus the product of the four marginals, at (N, 4) points."""
    prod = 1.0
    for i in range(4):
        prod = prod * marginal_density(i + 1, pts[..., i], theta, cfg)
    return joint_density(pts, theta, cfg) - prod


def standardized_scale(theta: MacroPoint, Sigma: float) -> float:
    """Factor turning a raw-coordinate F into the standardized one."""
    return 2 * math.pi * theta.sigma**2 * Sigma**2


@dataclass(frozen=True)
class FResult:
    r: float
    F_bruteforce: float
    F_closed_paper: float
    convention_ratio: float
    argmax: tuple
    coordinates: str = STANDARDIZED

    @property
    def F_standardized(self):
        return self.F_bruteforce


def _check_r(r):
    if not abs(r) <= R_MAX:
        raise InvalidArgumentError(f"|r| must not exceed {R_MAX}, got {r}")


@functools.lru_cache(maxsize=256)
def _bruteforce_standardized(r, resolution, refine):
    box = BoxDomain([-BOX_SD, -BOX_SD], [BOX_SD, BOX_SD])
    x, v = maximize(lambda p: np.abs(standardized_difference(p, r)), box, resolution, refine, vectorized=True)
    return tuple(float(c) for c in x), float(v)


@functools.lru_cache(maxsize=256)
def _bruteforce_raw(r, theta, Sigma, symmetric, resolution, refine):
    cfg = ModelConfig(Sigma, r, symmetric)
    m, sd = means(theta), stddevs(theta, cfg)
    box = BoxDomain(m - BOX_SD * sd, m + BOX_SD * sd)
    x, v = maximize(lambda p: np.abs(raw_difference(p, theta, cfg)), box, resolution, refine, vectorized=True)
    return tuple(float(c) for c in x), float(v)


def f_bruteforce(r: float, coordinates: str = STANDARDIZED, theta: MacroPoint = MacroPoint(0.0, 1.0),
                 Sigma: float = 1.0, resolution: int | None = None, refine: int = 60) -> FResult:
    """F by exhaustive grid search plus refinement.

    Standardized coordinates maximize |b(a1, a2; r) - phi(a1) phi(a2)| over
    [-8, 8]^2; the off-diagonal factors and scale Jacobians drop out, so the
    result does not depend on mu, sigma or Sigma. Raw coordinates maximize
    the literal four-variable difference over a +-8 sd box; that value
    carries the factor 1 / (2 pi sigma^2 Sigma^2).

    ``convention_ratio`` is F_closed over the standardized value (2 pi where
    the closed form holds).
    """
    _check_r(r)
    r = float(r)
    closed = f_closed(r)
    if coordinates == STANDARDIZED:
        x, v = _bruteforce_standardized(r, resolution or RES_2D, refine)
        std = v
    elif coordinates == RAW:
        x, v = _bruteforce_raw(r, theta, float(Sigma), False, resolution or RES_4D, refine)
        std = v * standardized_scale(theta, Sigma)
    else:
        raise InvalidArgumentError(f"coordinates must be 'standardized' or 'raw', got {coordinates!r}")
    ratio = closed / std if std > 0 else math.nan
    return FResult(r, v, closed, ratio, x, coordinates)


def diagonal_peak_sq(r: float) -> float:
    """Squared coordinate t^2 of the stationary point (t, t) of the standardized
    difference for r > 0; non-positive when no interior stationary point exists."""
    a = abs(r)
    return (1 + a) / a * math.log(math.sqrt(1 - a * a) * (1 + a))


CLOSED, BRUTEFORCE, BOTH = "closed", "bruteforce", "both"


def f_curve(r_min: float, r_max: float, n_points: int, method: str = CLOSED, resolution: int | None = None) -> list[FResult]:
    """F on a uniform grid of r. Rows of the closed method carry NaN brute-force fields."""
    if not -1 < r_min < r_max < 1:
        raise InvalidArgumentError("need -1 < r_min < r_max < 1")
    if n_points < 2:
        raise InvalidArgumentError("need at least 2 points")
    if method not in (CLOSED, BRUTEFORCE, BOTH):
        raise InvalidArgumentError(f"unknown method {method!r}")
    rows = []
    for r in np.linspace(r_min, r_max, n_points):
        r = float(r)
        if method == CLOSED:
            rows.append(FResult(r, math.nan, f_closed(r), math.nan, (math.nan, math.nan)))
            continue
        res = f_bruteforce(r, STANDARDIZED, resolution=resolution)
        if method == BRUTEFORCE:
            res = FResult(r, res.F_bruteforce, math.nan, math.nan, res.argmax)
        rows.append(res)
    return rows


@dataclass(frozen=True)
class BoundReport:
    battery: str
    r: float
    abs_C: float
    F_raw: float
    bound_product_norms: float
    bound_paper_norms: float
    satisfied_product_norms: bool
    satisfied_paper_norms: bool


def _ordered_battery(battery):
    by = {f.var: f for f in battery}
    if len(battery) != 4 or sorted(by) != [1, 2, 3, 4]:
        raise InvalidArgumentError("battery needs one test function for each of h11, h22, h12, h21")
    fs = [by[v] for v in (1, 2, 3, 4)]
    for f in fs:
        if not math.isfinite(f.one_norm):
            raise InvalidArgumentError(f"{describe(f)} has infinite 1-norm")
    for f in fs[:3]:
        if not math.isfinite(f.sup_norm):
            raise InvalidArgumentError(f"{describe(f)} has infinite sup-norm")
    return fs


def bound_check(battery: list[TestFunction], theta: MacroPoint, cfg: ModelConfig, r_grid, resolution: int | None = None) -> list[BoundReport]:
    """Compare |C| with F times the product of 1-norms and with F times
    sup(f1) sup(f2) sup(f3) |f4|_1, with F in raw coordinates, at each r."""
    if cfg.symmetric:
        raise InvalidArgumentError("the bound is stated for four independent microvariables; use symmetric=False")
    fs = _ordered_battery(battery)
    prod_one = math.prod(f.one_norm for f in fs)
    paper_norms = fs[0].sup_norm * fs[1].sup_norm * fs[2].sup_norm * fs[3].one_norm
    bid = battery_id(fs)
    out = []
    for r in r_grid:
        r = float(r)
        c = abs(ig_correlation(fs, theta, cfg.with_r(r)))
        F = f_bruteforce(r, RAW, theta, cfg.Sigma, resolution).F_bruteforce
        a, b = F * prod_one, F * paper_norms
        out.append(BoundReport(bid, r, c, F, a, b, c <= a + BOUND_SLACK, c <= b + BOUND_SLACK))
    return out
