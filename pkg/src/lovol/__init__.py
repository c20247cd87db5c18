"""Lower dimensional volumes of compact Riemannian manifolds."""

from .catalog import build, flat_torus, product, sphere
from .chart import Chart, FunctionMetric, GridMetric, Manifold, MetricSource, read_grid_metric, sample
from .coefficients import gamma_half, length_scale, nu, vanishes
from .curvature import curvature_point, curvature_scalars, riemann
from .errors import (
    BadParameter,
    CutoffTooSmall,
    InputError,
    InsufficientLadder,
    LovolError,
    MissingDerivatives,
    NonPositiveDefinite,
    NumericalError,
    UnsupportedWeight,
)
from .invariants import alpha
from .quadrature import integrate
from .spectral import dixmier_quotient, heat_trace, torus_spectrum
from .volumes import VolumeReport, full_report, lower_volume

__version__ = "0.1.0"
