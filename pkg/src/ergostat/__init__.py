"""Information geometry and correlation-decay classification of a correlated
2x2 Gaussian matrix model."""

from .model import Block, MacroPoint, ModelConfig
from .geometry import christoffel, fisher_metric_analytic, fisher_metric_numeric, ricci
from .dynamics import Constant, DampedOscillation, ExpDecay, GeodesicState, integrate_geodesic, schedule_r
from .correlation import (Cosine, GaussBump, Identity, Indicator, One, classify, correlation_series,
                          ig_correlation, time_average)
from .distinguishability import bound_check, f_bruteforce, f_closed, f_curve

__version__ = "0.1.0"
