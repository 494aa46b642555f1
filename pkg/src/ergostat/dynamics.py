"""Geodesic motion on the (mu, sigma) manifold and schedules r(tau)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .geometry import _analytic_gamma, _analytic_matrix
from .model import R_MAX, MacroPoint, ModelConfig
from .numerics import rk4_integrate


@dataclass(frozen=True)
class GeodesicState:
    theta: MacroPoint
    velocity: tuple[float, float]

    def as_array(self):
        return np.array([self.theta.mu, self.theta.sigma, *self.velocity], dtype=float)

    @classmethod
    def from_array(cls, y):
        return cls(MacroPoint(float(y[0]), float(y[1])), (float(y[2]), float(y[3])))


@dataclass
class Trajectory:
    """Sampled geodesic. ``y`` rows are (mu, sigma, mu_dot, sigma_dot)."""

    tau: np.ndarray
    y: np.ndarray
    speed: np.ndarray
    truncated: bool
    speed_drift: float

    def __len__(self):
        return len(self.tau)

    def samples(self):
        for t, row in zip(self.tau, self.y):
            yield float(t), GeodesicState.from_array(row)

    def theta_at(self, k) -> MacroPoint:
        return MacroPoint(float(self.y[k, 0]), float(self.y[k, 1]))


def _rhs(y):
    v = y[2:]
    acc = -np.einsum("kij,i,j->k", _analytic_gamma(y[1]), v, v)
    return np.concatenate([v, acc])


def geodesic_rhs(state: GeodesicState, cfg: ModelConfig):
    """Time derivative (mu_dot, sigma_dot, mu_ddot, sigma_ddot) of the geodesic equation.

    The connection does not depend on r, so ``cfg`` only fixes the model.
    """
    return _rhs(state.as_array())


def speed_squared(y, r):
    """g(v, v) for rows (mu, sigma, mu_dot, sigma_dot)."""
    y = np.atleast_2d(y)
    c = 1.0 / (y[:, 1] ** 2 * (1.0 - r * r))
    return c * (y[:, 2] ** 2 + 4.0 * y[:, 3] ** 2)


def integrate_geodesic(initial: GeodesicState, cfg: ModelConfig, tau_max: float, h: float = 1e-3) -> Trajectory:
    res = rk4_integrate(_rhs, initial.as_array(), tau_max, h, admissible=lambda y: y[1] > 0)
    speed = speed_squared(res.y, cfg.r)
    drift = 0.0 if speed[0] == 0 else float(np.max(np.abs(speed / speed[0] - 1.0)))
    return Trajectory(res.tau, res.y, speed, res.truncated, drift)


def _check_r0(r0):
    if not (math.isfinite(r0) and abs(r0) <= R_MAX):
        raise InvalidArgumentError(f"|r0| must not exceed {R_MAX}, got {r0}")


@dataclass(frozen=True)
class Constant:
    r0: float

    def __post_init__(self):
        _check_r0(self.r0)

    def __call__(self, tau):
        return np.full_like(np.asarray(tau, dtype=float), self.r0)


@dataclass(frozen=True)
class ExpDecay:
    """r(tau) = r0 exp(-lam tau)."""

    r0: float
    lam: float

    def __post_init__(self):
        _check_r0(self.r0)
        if not self.lam > 0:
            raise InvalidArgumentError("decay rate must be positive")

    def __call__(self, tau):
        return self.r0 * np.exp(-self.lam * np.asarray(tau, dtype=float))


@dataclass(frozen=True)
class DampedOscillation:
    """r(tau) = r0 exp(-lam tau) sin(alpha tau)."""

    r0: float
    alpha: float
    lam: float = 0.0

    def __post_init__(self):
        _check_r0(self.r0)
        if not self.lam >= 0:
            raise InvalidArgumentError("damping rate must be non-negative")

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.r0 * np.exp(-self.lam * tau) * np.sin(self.alpha * tau)


RSchedule = Constant | ExpDecay | DampedOscillation


def schedule_r(schedule: RSchedule, tau):
    """Evaluate a schedule at tau >= 0, clamped to |r| <= 1 - 1e-6."""
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0):
        raise InvalidArgumentError("tau must be non-negative")
    r = np.clip(schedule(t), -R_MAX, R_MAX)
    return float(r) if r.ndim == 0 else r
