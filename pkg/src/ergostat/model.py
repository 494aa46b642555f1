"""Correlated 2x2 Gaussian matrix model.

Microvariables are the matrix elements (h11, h22, h12, h21), always stored in
that order along the last array axis. The macrovariables are (mu, sigma):
h11 ~ N(mu, sigma^2) and h22 ~ N(0, Sigma^4 / sigma^2) with correlation r,
and the off-diagonal elements are independent N(0, sigma^2).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .numerics import ORDER_4D, gauss_hermite_rule, tensor_grid

R_MAX = 1.0 - 1e-6

H11, H22, H12, H21 = 1, 2, 3, 4
VARIABLE_NAMES = {H11: "h11", H22: "h22", H12: "h12", H21: "h21"}


@dataclass(frozen=True)
class MacroPoint:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise InvalidArgumentError("macro point must be finite")
        if not self.sigma > 0:
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma}")

    def as_array(self):
        return np.array([self.mu, self.sigma])


@dataclass(frozen=True)
class ModelConfig:
    """External parameters: covariance scale Sigma and correlation r.

    With ``symmetric=True`` the off-diagonal elements are identified
    (h21 == h12), so the microspace is three-dimensional.
    """

    Sigma: float = 1.0
    r: float = 0.0
    symmetric: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.Sigma) and self.Sigma > 0):
            raise InvalidArgumentError(f"Sigma must be positive, got {self.Sigma}")
        if not (math.isfinite(self.r) and abs(self.r) <= R_MAX):
            raise InvalidArgumentError(f"|r| must not exceed {R_MAX}, got {self.r}")

    def with_r(self, r):
        return ModelConfig(self.Sigma, float(r), self.symmetric)


class Block(enum.Enum):
    BIVARIATE = "bivariate"  # (h11, h22) only
    FULL = "full"  # all microvariables


@dataclass(frozen=True)
class MicroPoint:
    h11: float
    h22: float
    h12: float
    h21: float

    def as_array(self):
        return np.array([self.h11, self.h22, self.h12, self.h21])


def _as_micro(x):
    if isinstance(x, MicroPoint):
        return x.as_array()
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 4:
        raise InvalidArgumentError("micro points need 4 components (h11, h22, h12, h21)")
    return x


def bivariate_cov(theta: MacroPoint, cfg: ModelConfig):
    """Covariance of (h11, h22)."""
    s2 = theta.sigma**2
    c = cfg.r * cfg.Sigma**2
    return np.array([[s2, c], [c, cfg.Sigma**4 / s2]])


def stddevs(theta: MacroPoint, cfg: ModelConfig):
    """Marginal standard deviations in (h11, h22, h12, h21) order."""
    s = theta.sigma
    return np.array([s, cfg.Sigma**2 / s, s, s])


def means(theta: MacroPoint):
    return np.array([theta.mu, 0.0, 0.0, 0.0])


def bivariate_density(h11, h22, theta: MacroPoint, cfg: ModelConfig):
    r, S2 = cfg.r, cfg.Sigma**2
    one_m = 1.0 - r * r
    d1 = np.asarray(h11) - theta.mu
    h22 = np.asarray(h22)
    q = d1**2 / theta.sigma**2 + theta.sigma**2 * h22**2 / S2**2 - 2 * r * d1 * h22 / S2
    return np.exp(-q / (2 * one_m)) / (2 * math.pi * S2 * math.sqrt(one_m))


def _normal_pdf(x, m, s):
    z = (np.asarray(x) - m) / s
    return np.exp(-0.5 * z * z) / (s * math.sqrt(2 * math.pi))


def joint_density(x, theta: MacroPoint, cfg: ModelConfig):
    """Joint density at micro point(s) x (last axis ordered h11, h22, h12, h21).

    In the symmetric reading h21 is not an independent variable and is ignored.
    """
    x = _as_micro(x)
    p = bivariate_density(x[..., 0], x[..., 1], theta, cfg)
    p = p * _normal_pdf(x[..., 2], 0.0, theta.sigma)
    if not cfg.symmetric:
        p = p * _normal_pdf(x[..., 3], 0.0, theta.sigma)
    return p


def marginal_density(i: int, value, theta: MacroPoint, cfg: ModelConfig):
    """Marginal density of microvariable i (1=h11, 2=h22, 3=h12, 4=h21)."""
    if i not in VARIABLE_NAMES:
        raise InvalidArgumentError(f"variable index must be 1..4, got {i!r}")
    return _normal_pdf(value, means(theta)[i - 1], stddevs(theta, cfg)[i - 1])


@dataclass
class ConstraintReport:
    residuals: dict
    tol: float

    @property
    def passed(self) -> dict:
        return {k: abs(v) < self.tol for k, v in self.residuals.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def integrate_density(g, theta: MacroPoint, cfg: ModelConfig, order: int = ORDER_4D) -> float:
    """Integral of joint_density * g over the microspace by Gauss-Hermite quadrature.

    The density itself is evaluated at the nodes (not assumed Gaussian): the
    nodes come from the model covariance and the exp(-|u|^2) weight is undone
    explicitly. ``g`` maps an (N, 4) array of micro points to N values.
    """
    chol2 = np.linalg.cholesky(bivariate_cov(theta, cfg))
    d = 3 if cfg.symmetric else 4
    L = np.zeros((d, d))
    L[:2, :2] = chol2
    L[2:, 2:] = np.eye(d - 2) * theta.sigma
    u, w = tensor_grid(gauss_hermite_rule(order), d)
    pts = means(theta)[:d] + math.sqrt(2.0) * u @ L.T
    if cfg.symmetric:
        pts = np.column_stack([pts, pts[:, 2]])
    jac = 2 ** (d / 2) * np.prod(np.diag(L))
    vals = joint_density(pts, theta, cfg) * np.asarray(g(pts), dtype=float)
    return float(np.dot(w * np.exp(np.sum(u * u, axis=1)), vals)) * jac


def verify_constraints(theta: MacroPoint, cfg: ModelConfig, tol: float = 1e-10) -> ConstraintReport:
    """Check the moment constraints and normalization of the density by quadrature."""
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    mu, s2, S2 = theta.mu, theta.sigma**2, cfg.Sigma**2
    checks = {
        "normalization": (lambda x: np.ones(len(x)), 1.0),
        "mean_h11": (lambda x: x[:, 0], mu),
        "mean_h12": (lambda x: x[:, 2], 0.0),
        "mean_h21": (lambda x: x[:, 3], 0.0),
        "mean_h22": (lambda x: x[:, 1], 0.0),
        "var_h11": (lambda x: (x[:, 0] - mu) ** 2, s2),
        "second_h12": (lambda x: x[:, 2] ** 2, s2),
        "second_h21": (lambda x: x[:, 3] ** 2, s2),
        "second_h22": (lambda x: x[:, 1] ** 2, S2**2 / s2),
        "cov_h11_h22": (lambda x: (x[:, 0] - mu) * x[:, 1], cfg.r * S2),
    }
    residuals = {k: integrate_density(g, theta, cfg) - target for k, (g, target) in checks.items()}
    return ConstraintReport(residuals, tol)


def covariance_matrix(theta: MacroPoint, cfg: ModelConfig):
    """Covariance of the independent microvariables (3x3 when symmetric, else 4x4)."""
    d = 3 if cfg.symmetric else 4
    cov = np.eye(d) * theta.sigma**2
    cov[:2, :2] = bivariate_cov(theta, cfg)
    return cov


def sample(n: int, theta: MacroPoint, cfg: ModelConfig, seed: int):
    """Draw n micro points as an (n, 4) array; deterministic in ``seed``."""
    if n < 1:
        raise InvalidArgumentError("sample size must be at least 1")
    rng = np.random.default_rng(seed)
    cov = covariance_matrix(theta, cfg)
    L = np.linalg.cholesky(cov)
    z = rng.standard_normal((n, cov.shape[0]))
    x = means(theta)[: cov.shape[0]] + z @ L.T
    if cfg.symmetric:
        x = np.column_stack([x, x[:, 2]])
    return x


def log_density(x, theta: MacroPoint, cfg: ModelConfig, block: Block = Block.FULL):
    x = _as_micro(x)
    logp = np.log(bivariate_density(x[..., 0], x[..., 1], theta, cfg))
    if block is Block.FULL:
        offdiag = x[..., 2:3] if cfg.symmetric else x[..., 2:4]
        k = offdiag.shape[-1]
        logp = logp - k * np.log(theta.sigma * math.sqrt(2 * math.pi)) - np.sum(offdiag**2, axis=-1) / (2 * theta.sigma**2)
    return logp


def score_macro(x, theta: MacroPoint, cfg: ModelConfig, block: Block = Block.BIVARIATE):
    """Gradient of log p with respect to (mu, sigma), shape (..., 2)."""
    x = _as_micro(x)
    r, S2, s = cfg.r, cfg.Sigma**2, theta.sigma
    one_m = 1.0 - r * r
    d1 = x[..., 0] - theta.mu
    h22 = x[..., 1]
    d_mu = (d1 / s**2 - r * h22 / S2) / one_m
    d_sigma = (d1**2 / s**3 - s * h22**2 / S2**2) / one_m
    if block is Block.FULL:
        offdiag = x[..., 2:3] if cfg.symmetric else x[..., 2:4]
        d_sigma = d_sigma - offdiag.shape[-1] / s + np.sum(offdiag**2, axis=-1) / s**3
    return np.stack([d_mu, d_sigma], axis=-1)
