"""Coordinate charts, metric sources and sampled grid metrics.

A :class:`MetricSource` evaluates the metric tensor on batches of points:
``metric_at(x)`` takes an array of shape ``(..., n)`` and returns
``(..., n, n)``.  Sources with closed-form derivatives also implement
``d_metric_at`` (layout ``[..., k, i, j] = d_k g_ij``) and
``dd_metric_at`` (layout ``[..., k, l, i, j] = d_k d_l g_ij``) and set
``exact_derivatives = True``.

Grid nodes sit at cell midpoints, ``x = lower + (j + 1/2) h``, so charts
such as the polar chart of the sphere never touch their coordinate
singularities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from ._parallel import ordered_map
from .errors import BadParameter, MissingDerivatives, NonPositiveDefinite

MIN_RESOLUTION = 4


def _as_tuple(values, n, name, cast):
    if np.isscalar(values):
        values = [values] * n
    values = tuple(cast(v) for v in values)
    if len(values) != n:
        raise BadParameter(f"{name} needs {n} entries, got {len(values)}")
    return values


@dataclass(frozen=True)
class Chart:
    """A coordinate box with a midpoint grid on it."""

    dim: int
    lower: tuple
    upper: tuple
    resolution: tuple
    periodic: tuple
    homogeneous: bool = False
    exact_volume: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.dim, bool) or not isinstance(self.dim, int) or self.dim < 1:
            raise BadParameter(f"chart dimension must be >= 1, got {self.dim!r}")
        n = self.dim
        object.__setattr__(self, "lower", _as_tuple(self.lower, n, "lower", float))
        object.__setattr__(self, "upper", _as_tuple(self.upper, n, "upper", float))
        object.__setattr__(self, "resolution", _as_tuple(self.resolution, n, "resolution", int))
        object.__setattr__(self, "periodic", _as_tuple(self.periodic, n, "periodic", bool))
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise BadParameter(f"empty coordinate interval [{lo}, {hi}]")
        for r in self.resolution:
            if r < MIN_RESOLUTION:
                raise BadParameter(f"resolution must be >= {MIN_RESOLUTION}, got {r}")
        if self.homogeneous and self.exact_volume is None:
            raise BadParameter("a homogeneous chart needs exact_volume")

    @property
    def spacing(self) -> np.ndarray:
        return (np.array(self.upper) - np.array(self.lower)) / np.array(self.resolution)

    @property
    def node_count(self) -> int:
        return math.prod(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.lower) + np.array(self.upper)) / 2

    @property
    def box_volume(self) -> float:
        return float(np.prod(np.array(self.upper) - np.array(self.lower)))

    def axis_nodes(self, axis: int) -> np.ndarray:
        h = (self.upper[axis] - self.lower[axis]) / self.resolution[axis]
        return self.lower[axis] + (np.arange(self.resolution[axis]) + 0.5) * h

    def node_points(self, flat_indices) -> np.ndarray:
        """Coordinates of nodes given by row-major flat indices, shape (m, dim)."""
        multi = np.unravel_index(np.asarray(flat_indices), self.resolution)
        lower = np.array(self.lower)
        return lower + (np.stack(multi, axis=-1) + 0.5) * self.spacing

    def iter_batches(self, batch_size: int) -> Iterator[np.ndarray]:
        total = self.node_count
        for start in range(0, total, batch_size):
            yield np.arange(start, min(start + batch_size, total))

    def with_resolution(self, resolution) -> "Chart":
        return Chart(
            self.dim,
            self.lower,
            self.upper,
            _as_tuple(resolution, self.dim, "resolution", int),
            self.periodic,
            self.homogeneous,
            self.exact_volume,
        )

    def stencil_steps(self, points: np.ndarray, step, reach: int) -> np.ndarray:
        """Per-point, per-axis finite-difference steps.

        Along non-periodic axes the step shrinks near the box faces so that a
        stencil extending ``reach`` steps either side stays strictly inside
        the open box.  It is also capped at ``gap / resolution``: faces are
        where chart coordinates degenerate, and a step that is a fixed
        fraction of the distance to the face would leave the relative
        truncation error there constant under refinement.
        """
        points = np.atleast_2d(points)
        steps = np.broadcast_to(np.asarray(step, dtype=float), points.shape).copy()
        for axis in range(self.dim):
            if self.periodic[axis]:
                continue
            gap = np.minimum(points[:, axis] - self.lower[axis], self.upper[axis] - points[:, axis])
            cap = gap / max(reach + 1, self.resolution[axis])
            steps[:, axis] = np.minimum(steps[:, axis], cap)
        return steps

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "lower": list(self.lower),
            "upper": list(self.upper),
            "resolution": list(self.resolution),
            "periodic": list(self.periodic),
            "homogeneous": self.homogeneous,
            "exact_volume": self.exact_volume,
        }


class MetricSource:
    """Base class for metric samplers; subclasses implement ``metric_at``."""

    dim: int
    exact_derivatives: bool = False

    def metric_at(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def d_metric_at(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no closed-form first derivatives")

    def dd_metric_at(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no closed-form second derivatives")


class FunctionMetric(MetricSource):
    """Wrap plain callables as a metric source.

    ``metric`` maps a single point ``(n,)`` to an ``(n, n)`` matrix unless
    ``vectorized`` is true, in which case it must accept ``(..., n)``.
    """

    def __init__(
        self,
        dim: int,
        metric: Callable,
        d_metric: Callable | None = None,
        dd_metric: Callable | None = None,
        vectorized: bool = False,
    ):
        self.dim = dim
        self._fns = (metric, d_metric, dd_metric)
        self.vectorized = vectorized
        self.exact_derivatives = d_metric is not None and dd_metric is not None

    def _call(self, fn, x):
        x = np.asarray(x, dtype=float)
        if self.vectorized:
            return np.asarray(fn(x), dtype=float)
        flat = x.reshape(-1, self.dim)
        out = np.array([np.asarray(fn(p), dtype=float) for p in flat])
        return out.reshape(x.shape[:-1] + out.shape[1:])

    def metric_at(self, x):
        return self._call(self._fns[0], x)

    def d_metric_at(self, x):
        if self._fns[1] is None:
            return super().d_metric_at(x)
        return self._call(self._fns[1], x)

    def dd_metric_at(self, x):
        if self._fns[2] is None:
            return super().dd_metric_at(x)
        return self._call(self._fns[2], x)


@dataclass(frozen=True)
class Manifold:
    """A metric on a single chart."""

    chart: Chart
    source: MetricSource
    name: str = "custom"
    parameters: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.chart.dim


def _cholesky(g):
    """Batched Cholesky factor; uses LAPACK for float64, a column loop otherwise."""
    if g.dtype == np.float64:
        return np.linalg.cholesky(g)
    n = g.shape[-1]
    L = np.zeros_like(g)
    for j in range(n):
        pivot = g[..., j, j] - np.sum(L[..., j, :j] ** 2, axis=-1)
        if np.any(~(pivot > 0)):
            raise np.linalg.LinAlgError("matrix is not positive definite")
        L[..., j, j] = np.sqrt(pivot)
        for i in range(j + 1, n):
            L[..., i, j] = (g[..., i, j] - np.sum(L[..., i, :j] * L[..., j, :j], axis=-1)) / L[..., j, j]
    return L


def _lower_inverse(L):
    if L.dtype == np.float64:
        eye = np.broadcast_to(np.eye(L.shape[-1]), L.shape)
        return np.linalg.solve(L, eye)
    n = L.shape[-1]
    inv = np.zeros_like(L)
    for i in range(n):
        inv[..., i, i] = 1 / L[..., i, i]
        for j in range(i):
            acc = np.sum(L[..., i, j:i] * inv[..., j:i, j], axis=-1)
            inv[..., i, j] = -acc / L[..., i, i]
    return inv


def inverse_and_density(g):
    """Inverse metric and volume density ``sqrt(det g)``.

    Accepts a single matrix or a batch ``(..., n, n)`` in float64 or
    extended precision.  Positive definiteness is checked with a Cholesky
    factorization.
    """
    g = np.asarray(g)
    if g.dtype not in (np.float64, np.longdouble):
        g = g.astype(np.float64)
    try:
        chol = _cholesky(g)
    except np.linalg.LinAlgError:
        raise NonPositiveDefinite(_first_bad_node(g)) from None
    density = np.prod(np.diagonal(chol, axis1=-2, axis2=-1), axis=-1)
    if not np.all(np.isfinite(density)) or np.any(density <= 0):
        raise NonPositiveDefinite(_first_bad_node(g))
    linv = _lower_inverse(chol)
    inverse = np.swapaxes(linv, -1, -2) @ linv
    return inverse, density


def pivot_condition(g) -> np.ndarray:
    """Cheap conditioning proxy: largest diagonal entry over smallest Cholesky pivot."""
    g = np.asarray(g, dtype=np.float64)
    chol = np.linalg.cholesky(g)
    pivots = np.diagonal(chol, axis1=-2, axis2=-1) ** 2
    return np.max(np.diagonal(g, axis1=-2, axis2=-1), axis=-1) / np.min(pivots, axis=-1)


def _first_bad_node(g):
    if g.ndim == 2:
        return None
    flat = g.reshape(-1, g.shape[-2], g.shape[-1])
    for i, m in enumerate(flat):
        try:
            L = _cholesky(m)
            if np.all(np.diag(L) > 0):
                continue
        except np.linalg.LinAlgError:
            pass
        return int(i)
    return None


def _triu(n):
    return np.triu_indices(n)


def pack_symmetric(g: np.ndarray) -> np.ndarray:
    """Upper-triangle components of ``(..., n, n)`` in row-major order."""
    iu = _triu(g.shape[-1])
    return g[..., iu[0], iu[1]]


def unpack_symmetric(components: np.ndarray, n: int) -> np.ndarray:
    components = np.asarray(components, dtype=float)
    iu = _triu(n)
    g = np.zeros(components.shape[:-1] + (n, n))
    g[..., iu[0], iu[1]] = components
    g[..., iu[1], iu[0]] = components
    return g


class GridMetric:
    """Metric components sampled on the midpoint nodes of a chart.

    ``samples`` has shape ``(node_count, n(n+1)/2)`` holding the upper
    triangle of each node's matrix, nodes in row-major order.
    """

    def __init__(self, chart: Chart, samples):
        samples = np.ascontiguousarray(samples, dtype=np.float64)
        n = chart.dim
        width = n * (n + 1) // 2
        if samples.shape != (chart.node_count, width):
            raise BadParameter(
                f"expected samples of shape {(chart.node_count, width)}, got {samples.shape}"
            )
        samples.setflags(write=False)
        self.chart = chart
        self.samples = samples
        inverse_and_density(self.matrices())

    @property
    def dim(self) -> int:
        return self.chart.dim

    def matrices(self) -> np.ndarray:
        """Full matrices laid out on the grid, shape ``(*resolution, n, n)``."""
        g = unpack_symmetric(self.samples, self.dim)
        return g.reshape(tuple(self.chart.resolution) + (self.dim, self.dim))

    def node_metric(self, index: Sequence[int]) -> np.ndarray:
        """Metric at a multi-index; out-of-range indices wrap on periodic axes."""
        index = list(index)
        for axis, j in enumerate(index):
            res = self.chart.resolution[axis]
            if 0 <= j < res:
                continue
            if not self.chart.periodic[axis]:
                raise MissingDerivatives(
                    f"index {j} lies outside non-periodic axis {axis} of a file-backed grid"
                )
            index[axis] = j % res
        flat = np.ravel_multi_index(tuple(index), self.chart.resolution)
        return unpack_symmetric(self.samples[flat], self.dim)

    def require_periodic(self):
        if not all(self.chart.periodic):
            raise MissingDerivatives(
                "file-backed grid metrics can only be differentiated on fully periodic charts"
            )

    def to_dict(self) -> dict:
        c = self.chart
        return {
            "dim": c.dim,
            "lower": list(c.lower),
            "upper": list(c.upper),
            "resolution": list(c.resolution),
            "periodic": list(c.periodic),
            "components": self.samples.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridMetric":
        try:
            n = int(data["dim"])
            chart = Chart(n, data["lower"], data["upper"], data["resolution"], data["periodic"])
            comps = np.asarray(data["components"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, BadParameter):
                raise
            raise BadParameter(f"malformed grid-metric document: {exc}") from None
        width = n * (n + 1) // 2
        if comps.size != chart.node_count * width:
            raise BadParameter(
                f"grid-metric document has {comps.size} components, expected {chart.node_count * width}"
            )
        return cls(chart, comps.reshape(chart.node_count, width))


def sample(source: MetricSource, chart: Chart, batch_size: int = 16384) -> GridMetric:
    """Evaluate ``source`` at every midpoint node of ``chart``."""

    def work(idx):
        g = source.metric_at(chart.node_points(idx))
        try:
            inverse_and_density(g)
        except NonPositiveDefinite as exc:
            bad = idx[exc.node] if exc.node is not None else idx[0]
            raise NonPositiveDefinite(tuple(int(i) for i in np.unravel_index(bad, chart.resolution)))
        return pack_symmetric(g)

    parts = ordered_map(work, chart.iter_batches(batch_size))
    return GridMetric(chart, np.concatenate(parts, axis=0))


def write_grid_metric(path, grid: GridMetric) -> None:
    Path(path).write_text(json.dumps(grid.to_dict()) + "\n", encoding="utf-8")


def read_grid_metric(path) -> GridMetric:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BadParameter(f"cannot read grid-metric file {path}: {exc}") from None
    return GridMetric.from_dict(data)
