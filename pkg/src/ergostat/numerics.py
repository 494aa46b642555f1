"""Deterministic numerical kernels: Gauss-Hermite quadrature, Gaussian
expectations, central differences, RK4 and a grid + golden-section maximizer.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidArgumentError, NumericalDomainError

SQRT_PI = math.sqrt(math.pi)
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# per-axis defaults for tensor-product integrals
ORDER_2D = 32
ORDER_4D = 16


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Hermite rule for the weight exp(-x**2)."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> float:
        """Approximate the integral of f(x) exp(-x**2) over the real line."""
        return float(np.dot(self.weights, f(self.nodes)))


@dataclass(frozen=True, eq=False)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1 or not 1 <= lo.size <= 4:
            raise InvalidArgumentError("box bounds must be 1 to 4 matching reals")
        if not np.all(lo < hi):
            raise InvalidArgumentError(f"box needs lower < upper, got {lo} and {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.size


@functools.lru_cache(maxsize=None)
def _hermgauss(n):
    x, w = np.polynomial.hermite.hermgauss(n)
    # enforce exact node symmetry; hermgauss is symmetric up to rounding
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite_rule(n: int) -> QuadratureRule:
    """Return the n-point Gauss-Hermite rule (physicists' convention).

    Integrates p(x) exp(-x**2) exactly for polynomials p of degree <= 2n-1.
    """
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= 128:
        raise InvalidArgumentError(f"quadrature order must be an integer in [1, 128], got {n!r}")
    x, w = _hermgauss(int(n))
    return QuadratureRule(int(n), x, w)


@functools.lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def tensor_grid(rule: QuadratureRule, d: int):
    """Nodes (n**d, d) and weights (n**d,) of the d-fold tensor product rule.

    Node ordering is lexicographic and fixed, so sums are reproducible.
    """
    pts = np.array(list(itertools.product(rule.nodes, repeat=d)))
    wts = np.prod(np.array(list(itertools.product(rule.weights, repeat=d))), axis=1)
    return pts.reshape(-1, d), wts


def gaussian_expectation(f, mean, chol, rule: QuadratureRule | None = None) -> float:
    """E[f(X)] for X ~ N(mean, chol @ chol.T) by tensor Gauss-Hermite quadrature.

    ``f`` maps an (N, d) array of points to N values. Uses the substitution
    x = mean + sqrt(2) * chol @ u against the weight exp(-|u|**2).
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    chol = np.atleast_2d(np.asarray(chol, dtype=float))
    d = mean.size
    if d > 4:
        raise InvalidArgumentError("gaussian_expectation supports at most 4 dimensions")
    if chol.shape != (d, d):
        raise InvalidArgumentError(f"covariance factor must be {d}x{d}")
    if not np.allclose(chol, np.tril(chol), atol=0.0):
        raise InvalidArgumentError("covariance factor must be lower-triangular")
    if np.any(np.diag(chol) <= 0):
        raise InvalidArgumentError("covariance factor needs a strictly positive diagonal")
    if rule is None:
        rule = gauss_hermite_rule(ORDER_2D if d <= 2 else ORDER_4D)
    u, w = tensor_grid(rule, d)
    x = mean + math.sqrt(2.0) * u @ chol.T
    vals = np.asarray(f(x), dtype=float).reshape(-1)
    bad = ~np.isfinite(vals)
    if bad.any():
        node = x[np.argmax(bad)]
        raise NumericalDomainError(f"integrand is not finite at {node}", point=node)
    return float(np.dot(w, vals)) / math.pi ** (d / 2)


def default_step(x):
    return 1e-4 * np.maximum(1.0, np.abs(x))


def central_diff(f, x, h=None, domain: Callable | None = None):
    """Central-difference gradient and Hessian of f at x.

    ``f`` may return a scalar or an array; the derivative axes are prepended,
    so for array output of shape S the gradient has shape (m, *S) and the
    Hessian (m, m, *S). Both are second-order accurate in the step.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = x.size
    h = default_step(x) if h is None else np.broadcast_to(np.asarray(h, dtype=float), (m,)).copy()
    if np.any(h <= 0):
        raise InvalidArgumentError("finite-difference step must be positive")

    def ev(p):
        if domain is not None and not domain(p):
            raise NumericalDomainError(f"stencil point {p} is outside the domain", point=p)
        v = np.asarray(f(p), dtype=float)
        if not np.all(np.isfinite(v)):
            raise NumericalDomainError(f"function is not finite at {p}", point=p)
        return v

    e = np.eye(m) * h
    f0 = ev(x)
    plus = [ev(x + e[i]) for i in range(m)]
    minus = [ev(x - e[i]) for i in range(m)]
    grad = np.stack([(plus[i] - minus[i]) / (2 * h[i]) for i in range(m)])
    hess = np.empty((m, m) + f0.shape)
    for i in range(m):
        hess[i, i] = (plus[i] - 2 * f0 + minus[i]) / h[i] ** 2
        for j in range(i + 1, m):
            fpp = ev(x + e[i] + e[j])
            fpm = ev(x + e[i] - e[j])
            fmp = ev(x - e[i] + e[j])
            fmm = ev(x - e[i] - e[j])
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4 * h[i] * h[j])
    return grad, hess


class RK4Result(NamedTuple):
    tau: np.ndarray
    y: np.ndarray
    truncated: bool


def rk4_integrate(rhs, y0, tau_max: float, h: float, admissible: Callable | None = None) -> RK4Result:
    """Classical fourth-order Runge-Kutta on [0, tau_max].

    The step is shrunk to tau_max / ceil(tau_max / h) so the endpoint lands
    exactly on the grid. If ``admissible(y)`` becomes false (or the state
    turns non-finite) integration stops and the result is flagged truncated;
    the offending state is not included.
    """
    if not h > 0 or not tau_max > 0:
        raise InvalidArgumentError("rk4_integrate needs h > 0 and tau_max > 0")
    n = max(1, math.ceil(tau_max / h - 1e-9))
    dt = tau_max / n
    y = np.array(y0, dtype=float)
    ys = np.empty((n + 1,) + y.shape)
    ys[0] = y
    truncated = False
    last = n
    for k in range(n):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y_new = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_new)) or (admissible is not None and not admissible(y_new)):
            truncated = True
            last = k
            break
        y = y_new
        ys[k + 1] = y
    taus = dt * np.arange(last + 1)
    if not truncated:
        taus[-1] = tau_max
    return RK4Result(taus, ys[: last + 1], truncated)


def golden_section(g, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximize a unimodal scalar function on [a, b]; returns (x, g(x))."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - INV_PHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + INV_PHI * (b - a)
            gd = g(d)
    return (c, gc) if gc >= gd else (d, gd)


def _parabolic_vertex(g, t, gt, a, b):
    # one three-point parabola step; refines an argmax that golden-section
    # can only pin down to about sqrt(machine eps)
    delta = 1e-5 * max(1.0, abs(t))
    if t - delta < a or t + delta > b:
        return t, gt
    gm, gp = g(t - delta), g(t + delta)
    curv = gp - 2 * gt + gm
    if not curv < 0:
        return t, gt
    v = t - 0.5 * delta * (gp - gm) / curv
    if not a <= v <= b:
        return t, gt
    gv = g(v)
    return (v, gv) if gv >= gt else (t, gt)


def maximize(f, box: BoxDomain, resolution, refine_iterations: int = 20, vectorized: bool = False):
    """Maximize f over a box by exhaustive grid scan plus coordinate-wise
    golden-section refinement around the best grid point, finished by a
    bounded Nelder-Mead polish.

    ``resolution`` is a per-dimension grid count (int or sequence, each >= 3).
    With ``vectorized=True``, f maps an (N, d) array to N values; otherwise
    it takes a single d-vector. Returns (argmax, value); the value is never
    below the best grid sample.
    """
    d = box.dimension
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (d,))
    if np.any(res < 3):
        raise InvalidArgumentError("grid resolution must be at least 3 per dimension")

    if vectorized:
        f_many = f
        def f_one(x):
            return float(np.asarray(f(x[None, :]), dtype=float).reshape(-1)[0])
    else:
        def f_many(pts):
            return np.array([f(p) for p in pts], dtype=float)
        def f_one(x):
            return float(f(x))

    axes = [np.linspace(box.lower[i], box.upper[i], res[i]) for i in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    vals = np.asarray(f_many(grid), dtype=float).reshape(-1)
    bad = ~np.isfinite(vals)
    if bad.any():
        p = grid[np.argmax(bad)]
        raise NumericalDomainError(f"objective is not finite at grid point {p}", point=p)
    i_best = int(np.argmax(vals))
    x = grid[i_best].copy()
    best = float(vals[i_best])
    steps = (box.upper - box.lower) / (res - 1)

    for _ in range(refine_iterations):
        x_prev, best_prev = x.copy(), best
        for i in range(d):
            a = max(box.lower[i], x[i] - steps[i])
            b = min(box.upper[i], x[i] + steps[i])

            def g(t, i=i):
                p = x.copy()
                p[i] = t
                v = f_one(p)
                return v if np.isfinite(v) else -np.inf

            t, gt = golden_section(g, a, b, tol=1e-13 * max(1.0, abs(a), abs(b)))
            t, gt = _parabolic_vertex(g, t, gt, a, b)
            if gt >= best:
                x[i], best = t, gt
        if best - best_prev <= 1e-15 * max(1.0, abs(best)) and np.allclose(x, x_prev, rtol=0, atol=1e-12):
            break

    if refine_iterations > 0:
        # coordinate sweeps crawl along ridges that are not axis-aligned
        simplex = np.vstack([x, x + np.diag(0.5 * steps)])
        simplex = np.clip(simplex, box.lower, box.upper)
        neg = lambda p: -f_one(p) if np.all(np.isfinite(p)) else np.inf
        opt = minimize(neg, x, method="Nelder-Mead", bounds=list(zip(box.lower, box.upper)),
                       options={"initial_simplex": simplex, "xatol": 1e-11, "fatol": 1e-15 * max(abs(best), 1e-300),
                                "maxiter": 1000 * d})
        if np.isfinite(opt.fun) and -opt.fun >= best:
            x, best = np.asarray(opt.x, dtype=float), float(-opt.fun)
    return x, best
