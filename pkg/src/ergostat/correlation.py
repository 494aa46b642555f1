"""IG correlation of per-variable test functions and the finite-horizon
ergodic / mixing / Bernoulli classifier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import ndtr

from .dynamics import RSchedule, Trajectory, schedule_r
from .errors import InsufficientDataError, InvalidArgumentError
from .model import H11, H12, H21, H22, VARIABLE_NAMES, MacroPoint, ModelConfig, stddevs
from .numerics import gauss_hermite_rule, gauss_legendre

ORDER_1D = 32
WINDOW_SD = 12.0  # Gaussian mass outside +-12 sd is below 1e-32


class TestFunction:
    """A function of a single microvariable with exactly known norms.

    Subclasses provide vectorized evaluation, the closed-form mean under a
    normal law, and the points where they are not smooth.
    """

    __test__ = False  # not a pytest class
    var: int
    one_norm: float = math.inf
    sup_norm: float = math.inf

    def __call__(self, x):
        raise NotImplementedError

    def gaussian_mean(self, m, s):
        """E[f(m + s Z)] for standard normal Z; m may be an array."""
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        return []

    def _check_var(self):
        if self.var not in VARIABLE_NAMES:
            raise InvalidArgumentError(f"variable index must be 1..4, got {self.var!r}")


@dataclass(frozen=True)
class Identity(TestFunction):
    var: int

    def __post_init__(self):
        self._check_var()

    def __call__(self, x):
        return np.asarray(x, dtype=float)

    def gaussian_mean(self, m, s):
        return np.asarray(m, dtype=float) + 0.0


@dataclass(frozen=True)
class Cosine(TestFunction):
    var: int
    omega: float
    sup_norm: float = field(default=1.0, init=False)

    def __post_init__(self):
        self._check_var()

    def __call__(self, x):
        return np.cos(self.omega * np.asarray(x, dtype=float))

    def gaussian_mean(self, m, s):
        return np.cos(self.omega * np.asarray(m, dtype=float)) * math.exp(-0.5 * (self.omega * s) ** 2)


@dataclass(frozen=True)
class GaussBump(TestFunction):
    """exp(-(x - a)^2 / (2 s^2))."""

    var: int
    a: float
    s: float
    sup_norm: float = field(default=1.0, init=False)

    def __post_init__(self):
        self._check_var()
        if not self.s > 0:
            raise InvalidArgumentError("bump width must be positive")

    @property
    def one_norm(self):
        return self.s * math.sqrt(2 * math.pi)

    def __call__(self, x):
        return np.exp(-0.5 * ((np.asarray(x, dtype=float) - self.a) / self.s) ** 2)

    def gaussian_mean(self, m, s):
        v = self.s**2 + s**2
        return self.s / math.sqrt(v) * np.exp(-0.5 * (np.asarray(m, dtype=float) - self.a) ** 2 / v)

    def breakpoints(self):
        # not kinks, but splitting here keeps narrow bumps resolved
        return [self.a - 8 * self.s, self.a, self.a + 8 * self.s]


@dataclass(frozen=True)
class Indicator(TestFunction):
    """1 on [a, b], 0 elsewhere."""

    var: int
    a: float
    b: float
    sup_norm: float = field(default=1.0, init=False)

    def __post_init__(self):
        self._check_var()
        if not self.a < self.b:
            raise InvalidArgumentError("indicator needs a < b")

    @property
    def one_norm(self):
        return self.b - self.a

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return ((x >= self.a) & (x <= self.b)).astype(float)

    def gaussian_mean(self, m, s):
        m = np.asarray(m, dtype=float)
        return ndtr((self.b - m) / s) - ndtr((self.a - m) / s)

    def breakpoints(self):
        return [self.a, self.b]


@dataclass(frozen=True)
class One(TestFunction):
    var: int
    sup_norm: float = field(default=1.0, init=False)

    def __post_init__(self):
        self._check_var()

    def __call__(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def gaussian_mean(self, m, s):
        return np.ones_like(np.asarray(m, dtype=float))


@dataclass(frozen=True)
class LinearCombination(TestFunction):
    """sum_k c_k f_k for test functions of one variable.

    Norms are the triangle-inequality bounds, not exact values.
    """

    var: int
    terms: tuple  # ((coef, TestFunction), ...)

    def __post_init__(self):
        self._check_var()
        if any(f.var != self.var for _, f in self.terms):
            raise InvalidArgumentError("all terms must act on the same variable")

    @property
    def one_norm(self):
        return sum(abs(c) * f.one_norm for c, f in self.terms)

    @property
    def sup_norm(self):
        return sum(abs(c) * f.sup_norm for c, f in self.terms)

    def __call__(self, x):
        return sum(c * f(x) for c, f in self.terms)

    def gaussian_mean(self, m, s):
        return sum(c * f.gaussian_mean(m, s) for c, f in self.terms)

    def breakpoints(self):
        return sorted({b for _, f in self.terms for b in f.breakpoints()})


def describe(f: TestFunction) -> str:
    name = VARIABLE_NAMES[f.var]
    if isinstance(f, Identity):
        return f"{name}"
    if isinstance(f, Cosine):
        return f"cos({f.omega:g}*{name})"
    if isinstance(f, GaussBump):
        return f"bump({name};{f.a:g},{f.s:g})"
    if isinstance(f, Indicator):
        return f"1[{f.a:g}<={name}<={f.b:g}]"
    if isinstance(f, One):
        return "1"
    return f"lincomb({name})"


def battery_id(fs: Sequence[TestFunction]) -> str:
    return "*".join(describe(f) for f in sorted(fs, key=lambda f: f.var))


def normal_expectation(g: Callable, m: float, s: float, breakpoints=(), order: int = ORDER_1D) -> float:
    """E[g(X)] for X ~ N(m, s^2).

    Smooth integrands use Gauss-Hermite. If any breakpoint falls within
    +-12 sd of the mean the window is split there and each piece gets
    Gauss-Legendre, so jumps are integrated exactly.
    """
    lo, hi = m - WINDOW_SD * s, m + WINDOW_SD * s
    cuts = sorted({b for b in breakpoints if lo < b < hi})
    if not cuts:
        rule = gauss_hermite_rule(order)
        return float(np.dot(rule.weights, g(m + math.sqrt(2.0) * s * rule.nodes))) / math.sqrt(math.pi)
    x, w = gauss_legendre(2 * order)
    edges = [lo, *cuts, hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        pts = a + half * (x + 1.0)
        z = (pts - m) / s
        dens = np.exp(-0.5 * z * z) / (s * math.sqrt(2 * math.pi))
        total += half * float(np.dot(w, dens * g(pts)))
    return total


def _by_variable(fs):
    out = {}
    for f in fs:
        if f.var in out:
            raise InvalidArgumentError(f"two test functions act on {VARIABLE_NAMES[f.var]}")
        out[f.var] = f
    for v in VARIABLE_NAMES:
        out.setdefault(v, One(v))
    return out


def _mixed_moment(f1, f2, theta, cfg, order):
    """E[f1(h11) f2(h22)] via the conditional law of h22 given h11."""
    s1 = theta.sigma
    s2 = cfg.Sigma**2 / theta.sigma
    if isinstance(f1, One):
        return float(f2.gaussian_mean(0.0, s2))
    if isinstance(f2, One):
        return float(f1.gaussian_mean(theta.mu, s1))
    r = cfg.r
    slope = r * s2 / s1
    cond_sd = s2 * math.sqrt(1.0 - r * r)
    bps = list(f1.breakpoints())
    if slope != 0:
        bps += [theta.mu + b / slope for b in f2.breakpoints()]

    def g(x):
        return f1(x) * f2.gaussian_mean(slope * (x - theta.mu), cond_sd)

    return normal_expectation(g, theta.mu, s1, bps, order)


def marginal_expectations(fs, theta: MacroPoint, cfg: ModelConfig) -> dict:
    """<f_i> under each microvariable's marginal law, from the closed-form normal means."""
    by = _by_variable(fs)
    sd = stddevs(theta, cfg)
    mean = [theta.mu, 0.0, 0.0, 0.0]
    return {v: float(f.gaussian_mean(mean[v - 1], sd[v - 1])) for v, f in by.items()}


def ig_correlation(fs: Sequence[TestFunction], theta: MacroPoint, cfg: ModelConfig, order: int = ORDER_1D) -> float:
    """E[prod f_i] under the joint law minus prod E[f_i] under the marginals.

    Variables without a function get the constant 1, so a two-function
    battery on (h11, h22) gives the bivariate-block correlation. The
    off-diagonal pair factorizes from (h11, h22), so the joint term is a
    1D integral over h11 (with h22 integrated in closed form given h11)
    times the off-diagonal factor.
    """
    by = _by_variable(fs)
    marg = marginal_expectations(by.values(), theta, cfg)
    mixed = _mixed_moment(by[H11], by[H22], theta, cfg, order)
    if cfg.symmetric:
        f3, f4 = by[H12], by[H21]
        if isinstance(f3, One) or isinstance(f4, One):
            off = marg[H21] if isinstance(f3, One) else marg[H12]
        else:
            off = normal_expectation(lambda x: f3(x) * f4(x), 0.0, theta.sigma, f3.breakpoints() + f4.breakpoints(), order)
    else:
        off = marg[H12] * marg[H21]
    return mixed * off - marg[H11] * marg[H22] * marg[H12] * marg[H21]


@dataclass
class CorrelationSeries:
    tau: np.ndarray
    r: np.ndarray
    C: np.ndarray
    battery: str = ""

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        if np.any(np.diff(self.tau) <= 0):
            raise InvalidArgumentError("tau must be strictly increasing")

    def __len__(self):
        return len(self.tau)


def trajectory_path(traj: Trajectory) -> Callable[[float], MacroPoint]:
    """Linear interpolation of a geodesic's (mu, sigma) in tau."""

    def at(t):
        if t > traj.tau[-1] + 1e-12:
            raise InvalidArgumentError(f"tau={t} is beyond the trajectory (ends at {traj.tau[-1]})")
        return MacroPoint(float(np.interp(t, traj.tau, traj.y[:, 0])), float(np.interp(t, traj.tau, traj.y[:, 1])))

    return at


def correlation_series(fs, theta, cfg: ModelConfig, schedule: RSchedule, taus, order: int = ORDER_1D) -> CorrelationSeries:
    """C(tau) with r = schedule(tau) and theta either fixed or a callable tau -> MacroPoint."""
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or len(taus) < 2 or np.any(np.diff(taus) <= 0):
        raise InvalidArgumentError("tau grid must be strictly increasing with at least 2 points")
    path = theta if callable(theta) else (lambda t: theta)
    rs = schedule_r(schedule, taus)
    cs = np.array([ig_correlation(fs, path(t), cfg.with_r(r), order) for t, r in zip(taus, rs)])
    return CorrelationSeries(taus, rs, cs, battery_id(fs))


def running_average(series: CorrelationSeries):
    """(1/T) int_{tau_0}^{T} C for every grid point T > tau_0."""
    integral = cumulative_trapezoid(series.C, series.tau, initial=0.0)
    span = series.tau - series.tau[0]
    return integral[1:] / span[1:]


def time_average(series: CorrelationSeries, T: float) -> float:
    """Trapezoid average of C over [tau_0, T]; T may fall between grid points."""
    tau, C = series.tau, series.C
    if not tau[0] < T <= tau[-1] + 1e-12 * max(1.0, abs(tau[-1])):
        raise InvalidArgumentError(f"T={T} is outside the series range ({tau[0]}, {tau[-1]}]")
    T = min(T, tau[-1])
    k = int(np.searchsorted(tau, T, side="right"))
    t = np.append(tau[:k], T) if tau[k - 1] < T else tau[:k]
    c = np.append(C[:k], np.interp(T, tau, C)) if tau[k - 1] < T else C[:k]
    return float(np.trapezoid(c, t) / (T - tau[0]))


BERNOULLI, MIXING, ERGODIC, UNCLASSIFIED = "Bernoulli", "Mixing", "Ergodic", "Unclassified"


@dataclass
class IgehVerdict:
    level: str
    diagnostics: dict


def classify(series: CorrelationSeries, eps_b: float = 1e-9, eps_m: float = 1e-6, eps_e: float = 1e-6,
             tail_fraction: float = 0.2, ergodic_rel: float = 0.05) -> IgehVerdict:
    """Assign the strongest level whose finite-horizon criteria hold.

    Bernoulli: max|C| < eps_b over the whole series.
    Mixing: max|C| over the last ``tail_fraction`` of the grid is below eps_m
    and either at most a quarter of the global max or the whole series is
    below eps_m.
    Ergodic: the running time average has vanished (its envelope over the
    last half of the horizon is below eps_e), or it is decaying: the late
    envelope is at most half the envelope over [T/8, T/4] and at most
    ``ergodic_rel`` times max|C|.
    Each level also accepts anything the stronger level accepts.
    """
    n = len(series)
    if n < 8:
        raise InsufficientDataError(f"classification needs at least 8 points, got {n}")
    if not 0 < tail_fraction < 1:
        raise InvalidArgumentError("tail_fraction must lie in (0, 1)")
    if not (eps_b > 0 and eps_m > 0 and eps_e > 0 and ergodic_rel > 0):
        raise InvalidArgumentError("tolerances must be positive")
    if eps_b > eps_m:
        raise InvalidArgumentError("eps_b must not exceed eps_m")

    absC = np.abs(series.C)
    gmax = float(absC.max())
    n_tail = max(1, math.ceil(tail_fraction * n))
    tail_max = float(absC[-n_tail:].max())

    avg = running_average(series)
    T = series.tau[1:] - series.tau[0]
    T_max = T[-1]
    late = avg[T >= 0.5 * T_max]
    early = avg[(T >= 0.125 * T_max) & (T <= 0.25 * T_max)]
    late_env = float(np.abs(late).max())
    early_env = float(np.abs(early).max()) if early.size else math.inf

    bernoulli = gmax < eps_b
    mixing = bernoulli or (tail_max < eps_m and (tail_max <= 0.25 * gmax or gmax < eps_m))
    ergodic = mixing or late_env < eps_e or (late_env <= 0.5 * early_env and late_env <= ergodic_rel * gmax)

    level = BERNOULLI if bernoulli else MIXING if mixing else ERGODIC if ergodic else UNCLASSIFIED
    return IgehVerdict(level, {
        "max_abs_C": gmax,
        "tail_max_abs_C": tail_max,
        "time_avg": float(avg[-1]),
        "late_avg_envelope": late_env,
        "early_avg_envelope": early_env,
        "tolerances": {"eps_b": eps_b, "eps_m": eps_m, "eps_e": eps_e,
                       "tail_fraction": tail_fraction, "ergodic_rel": ergodic_rel},
    })
