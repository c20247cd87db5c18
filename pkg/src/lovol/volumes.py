"""Lower dimensional volumes Vol^(k) = nu(n, k) * integral of alpha_{(n-k)/2}.

When ``n - k`` is odd the volume is zero by the parity rule and nothing
is integrated.  Otherwise the weight ``(n - k) / 2`` invariant is
integrated against the Riemannian density, either by full quadrature or,
on homogeneous charts, by one evaluation times the exact volume.
Negative values are legitimate and reported as they come out.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from . import curvature
from .chart import GridMetric, Manifold, inverse_and_density
from .coefficients import nu
from .errors import UnsupportedWeight
from .invariants import alpha, check_weight
from .quadrature import IntegralResult, integrate, integrate_samples


@dataclass(frozen=True)
class VolumeReport:
    n: int
    k: int
    parity_zero: bool
    coefficient: float
    integral_alpha: Optional[float]
    volume_k: Optional[float]
    error_estimate: Optional[float]
    method: str
    weight: int
    units: str
    nodes_used: int = 0
    status: str = "ok"

    def as_dict(self) -> dict:
        return asdict(self)


def alpha_integrand(m: Manifold, j: int, *, order=4, step=None, exact=None):
    """Pointwise ``alpha_j`` on the chart of ``m`` as a batch function."""
    j = check_weight(j)
    kw = dict(chart=m.chart, step=step, order=order, exact=exact)

    if j == 0:
        return lambda pts: np.ones(len(pts))
    if j == 1:
        return lambda pts: alpha(curvature.curvature_scalars(m.source, pts, norms=False, **kw), 1)

    def weight_two(pts):
        fields = curvature.curvature_scalars(m.source, pts, **kw)
        fields["lap_kappa"] = curvature.laplacian_kappa(m.source, pts, **kw)
        return alpha(fields, 2)

    return weight_two


def density_function(m: Manifold):
    return lambda pts: inverse_and_density(m.source.metric_at(pts))[1]


def integrate_alpha(m: Union[Manifold, GridMetric], j: int, *, method="auto", order=4,
                    step=None, exact=None) -> IntegralResult:
    """Integral of ``alpha_j dv_g`` over the manifold."""
    if isinstance(m, GridMetric):
        return _grid_integral(m, j, order)
    integrand = alpha_integrand(m, j, order=order, step=step, exact=exact)
    return integrate(m.chart, integrand, density_function(m), method=method)


def _grid_integral(grid: GridMetric, j: int, order: int) -> IntegralResult:
    j = check_weight(j)
    if j == 0:
        _, dens = inverse_and_density(grid.matrices())
        return integrate_samples(grid.chart, dens)
    fields = curvature.grid_curvature(grid, order)
    return integrate_samples(grid.chart, alpha(fields, j) * fields["density"])


def lower_volume(m: Union[Manifold, GridMetric], k: int, *, method="auto", order=4,
                 step=None, exact=None) -> VolumeReport:
    """Vol^(k) of a manifold given by a chart and metric source (or a periodic grid)."""
    n = m.chart.dim
    coeffs = nu(n, k)
    weight = (n - k) // 2
    units = f"length^{k}"
    if coeffs.vanishes:
        return VolumeReport(n, k, True, 0.0, 0.0, 0.0, 0.0, "parity", weight, units)
    check_weight(weight)
    result = integrate_alpha(m, weight, method=method, order=order, step=step, exact=exact)
    c = coeffs.coefficient
    return VolumeReport(
        n, k, False, c, result.value, c * result.value, abs(c) * result.error_estimate,
        result.method, weight, units, result.nodes_used,
    )


def full_report(m: Union[Manifold, GridMetric], **kw) -> list[VolumeReport]:
    """Reports for k = 1..n; orders needing weight >= 3 are marked, not dropped."""
    n = m.chart.dim
    reports = []
    for k in range(1, n + 1):
        try:
            reports.append(lower_volume(m, k, **kw))
        except UnsupportedWeight as exc:
            reports.append(
                VolumeReport(
                    n, k, False, nu(n, k).coefficient, None, None, None, "none",
                    exc.weight, f"length^{k}", 0, "unsupported_weight",
                )
            )
    return reports
