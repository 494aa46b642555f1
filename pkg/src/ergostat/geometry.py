"""Fisher-Rao geometry of the (mu, sigma) manifold.

Coordinates are ordered (mu, sigma). Curvature follows the convention
R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb},
Ricci R_{bd} = R^a_{bad}, which gives the hyperbolic plane (dx^2+dy^2)/y^2
scalar curvature -2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalDomainError
from .model import Block, MacroPoint, ModelConfig, bivariate_cov, means, score_macro
from .numerics import ORDER_2D, ORDER_4D, central_diff, default_step, gauss_hermite_rule, gaussian_expectation

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "fd"


@dataclass(frozen=True)
class MetricTensor:
    at: MacroPoint
    g11: float
    g12: float
    g22: float

    def __post_init__(self):
        if not (self.g11 > 0 and self.g11 * self.g22 - self.g12**2 > 0):
            raise InvalidArgumentError(f"metric at {self.at} is not positive-definite")

    @property
    def matrix(self):
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    @classmethod
    def from_matrix(cls, at, g):
        return cls(at, float(g[0, 0]), float(0.5 * (g[0, 1] + g[1, 0])), float(g[1, 1]))


@dataclass(frozen=True)
class Christoffel:
    """Connection coefficients; ``gamma[k, i, j]`` is G^k_{ij} (0 = mu, 1 = sigma)."""

    at: MacroPoint
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        # symmetrize so G^k_ij == G^k_ji holds bit-for-bit
        object.__setattr__(self, "gamma", 0.5 * (g + g.transpose(0, 2, 1)))

    def __getitem__(self, kij):
        return float(self.gamma[kij])


@dataclass(frozen=True)
class CurvatureReport:
    at: MacroPoint
    R11: float
    R22: float
    R12: float
    R: float


def _check_mode(mode):
    if mode not in (ANALYTIC, FINITE_DIFFERENCE):
        raise InvalidArgumentError(f"mode must be 'analytic' or 'fd', got {mode!r}")


def fisher_metric_numeric(theta: MacroPoint, cfg: ModelConfig, block: Block = Block.BIVARIATE, order: int | None = None) -> MetricTensor:
    """Fisher metric E[score score^T] by tensor Gauss-Hermite quadrature over the block's microvariables."""
    if block is Block.BIVARIATE:
        rule = gauss_hermite_rule(order or ORDER_2D)
        mean = means(theta)[:2]
        chol = np.linalg.cholesky(bivariate_cov(theta, cfg))

        def score(x):
            pts = np.zeros((len(x), 4))
            pts[:, :2] = x
            return score_macro(pts, theta, cfg, Block.BIVARIATE)
    else:
        rule = gauss_hermite_rule(order or ORDER_4D)
        d = 3 if cfg.symmetric else 4
        mean = means(theta)[:d]
        chol = np.zeros((d, d))
        chol[:2, :2] = np.linalg.cholesky(bivariate_cov(theta, cfg))
        chol[2:, 2:] = np.eye(d - 2) * theta.sigma

        def score(x):
            pts = x if d == 4 else np.column_stack([x, x[:, 2]])
            return score_macro(pts, theta, cfg, Block.FULL)

    g = np.empty((2, 2))
    for i, j in ((0, 0), (0, 1), (1, 1)):
        g[i, j] = g[j, i] = gaussian_expectation(lambda x: (lambda s: s[:, i] * s[:, j])(score(x)), mean, chol, rule)
    return MetricTensor.from_matrix(theta, g)


def _analytic_matrix(mu, sigma, r):
    c = 1.0 / (sigma**2 * (1.0 - r * r))
    return np.array([[c, 0.0], [0.0, 4.0 * c]])


def fisher_metric_analytic(theta: MacroPoint, cfg: ModelConfig) -> MetricTensor:
    """Closed-form metric of the (h11, h22) block: diag(1, 4) / (sigma^2 (1 - r^2))."""
    return MetricTensor.from_matrix(theta, _analytic_matrix(theta.mu, theta.sigma, cfg.r))


def paper_literal_metric(theta: MacroPoint, cfg: ModelConfig) -> MetricTensor:
    """The variant with sigma (not sigma^2) in the denominator.

    Kept for comparison only: its connection and curvature do not match the
    Christoffel symbols and Ricci components used elsewhere in this module.
    """
    c = 1.0 / (theta.sigma * (1.0 - cfg.r**2))
    return MetricTensor(theta, c, 0.0, 4.0 * c)


def christoffel_from_metric(metric_fn, x, h=None, domain=None):
    """G^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij) from central differences.

    ``metric_fn`` maps a coordinate vector to an (m, m) array.
    """
    x = np.asarray(x, dtype=float)
    dg, _ = central_diff(metric_fn, x, h=h, domain=domain)  # dg[l, i, j] = d_l g_ij
    ginv = np.linalg.inv(metric_fn(x))
    lower = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    return np.einsum("kl,lij->kij", ginv, lower)


def riemann_from_christoffel(gamma_fn, x, h=None, domain=None):
    """R^a_{bcd} from a Christoffel field ``gamma_fn(x) -> G[a, b, c]``."""
    x = np.asarray(x, dtype=float)
    dG, _ = central_diff(gamma_fn, x, h=h, domain=domain)  # dG[c, a, d, b] = d_c G^a_{db}
    G = gamma_fn(x)
    term = np.einsum("cadb->abcd", dG)
    quad = np.einsum("ace,edb->abcd", G, G)
    return term - term.transpose(0, 1, 3, 2) + quad - quad.transpose(0, 1, 3, 2)


def ricci_from_christoffel(gamma_fn, metric_fn, x, h=None, domain=None):
    """Ricci tensor R_bd = R^a_{bad} and scalar R = g^{bd} R_bd."""
    riem = riemann_from_christoffel(gamma_fn, x, h=h, domain=domain)
    ric = np.einsum("abad->bd", riem)
    scalar = float(np.einsum("bd,bd->", np.linalg.inv(metric_fn(np.asarray(x, dtype=float))), ric))
    return ric, scalar


def _positive_sigma(p):
    return p[1] > 0


def _fd_steps(theta):
    h = default_step(theta.as_array())
    if theta.sigma - h[1] <= 0:
        raise NumericalDomainError(f"finite-difference stencil at sigma={theta.sigma} would cross sigma <= 0",
                                   point=(theta.mu, theta.sigma - h[1]))
    return h


def _analytic_gamma(sigma):
    G = np.zeros((2, 2, 2))
    G[0, 0, 1] = G[0, 1, 0] = -1.0 / sigma
    G[1, 0, 0] = 1.0 / (4.0 * sigma)
    G[1, 1, 1] = -1.0 / sigma
    return G


def christoffel(theta: MacroPoint, cfg: ModelConfig, mode: str = ANALYTIC) -> Christoffel:
    _check_mode(mode)
    if mode == ANALYTIC:
        return Christoffel(theta, _analytic_gamma(theta.sigma))
    h = _fd_steps(theta)
    metric = lambda p: _analytic_matrix(p[0], p[1], cfg.r)
    return Christoffel(theta, christoffel_from_metric(metric, theta.as_array(), h=h, domain=_positive_sigma))


def ricci(theta: MacroPoint, cfg: ModelConfig, mode: str = ANALYTIC) -> CurvatureReport:
    _check_mode(mode)
    s, r = theta.sigma, cfg.r
    if mode == ANALYTIC:
        return CurvatureReport(theta, -1.0 / (4 * s * s), -1.0 / (s * s), 0.0, -0.5 * (1.0 - r * r))
    h = _fd_steps(theta)
    metric = lambda p: _analytic_matrix(p[0], p[1], r)
    # the inner stencil needs sigma > 0 at every outer stencil point too
    inner_h = lambda p: default_step(p)
    gamma_fn = lambda p: christoffel_from_metric(metric, p, h=inner_h(p), domain=_positive_sigma)
    ric, scalar = ricci_from_christoffel(gamma_fn, metric, theta.as_array(), h=h, domain=_positive_sigma)
    return CurvatureReport(theta, float(ric[0, 0]), float(ric[1, 1]), float(0.5 * (ric[0, 1] + ric[1, 0])), scalar)


def geometry_report(theta: MacroPoint, cfg: ModelConfig, block: Block = Block.BIVARIATE, order: int | None = None) -> dict:
    """Metric (numeric, analytic, sigma-denominator variant), connection and curvature as plain data."""
    g_num = fisher_metric_numeric(theta, cfg, block, order)
    g_an = fisher_metric_analytic(theta, cfg)
    g_lit = paper_literal_metric(theta, cfg)
    G = christoffel(theta, cfg, ANALYTIC)
    G_fd = christoffel(theta, cfg, FINITE_DIFFERENCE)
    ric = ricci(theta, cfg, ANALYTIC)
    ric_fd = ricci(theta, cfg, FINITE_DIFFERENCE)
    names = ("mu", "sigma")
    gamma = {f"{names[k]}_{names[i]}{names[j]}": G[k, i, j] for k in range(2) for i in range(2) for j in range(i, 2)}
    gamma_fd = {f"{names[k]}_{names[i]}{names[j]}": G_fd[k, i, j] for k in range(2) for i in range(2) for j in range(i, 2)}
    lit_gap = float(np.max(np.abs(g_lit.matrix - g_an.matrix)))
    return {
        "at": {"mu": theta.mu, "sigma": theta.sigma},
        "r": cfg.r,
        "Sigma": cfg.Sigma,
        "block": block.value,
        "g": g_num.matrix.tolist(),
        "g_analytic": g_an.matrix.tolist(),
        "paper_literal_metric": g_lit.matrix.tolist(),
        "paper_literal_max_abs_diff": lit_gap,
        "note": (
            "paper_literal_metric uses sigma instead of sigma^2 in the denominator; "
            "it coincides with g_analytic only at sigma = 1 and does not reproduce the "
            "reported Christoffel symbols or Ricci scalar"
        ),
        "christoffel": gamma,
        "christoffel_fd": gamma_fd,
        "ricci": {"R11": ric.R11, "R22": ric.R22, "R12": ric.R12, "R": ric.R},
        "ricci_fd": {"R11": ric_fd.R11, "R22": ric_fd.R22, "R12": ric_fd.R12, "R": ric_fd.R},
    }
