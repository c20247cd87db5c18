"""Reference manifolds with closed-form metrics and curvature constants.

* ``flat_torus(L_1, ..., L_n)``: the box ``prod [0, L_i)`` with the
  Euclidean metric, periodic in every axis.
* ``sphere(n, r)``: hyperspherical angles ``(theta_1, ..., theta_{n-1}, phi)``
  on ``(0, pi)^(n-1) x (0, 2 pi)`` with
  ``g = r^2 diag(1, s_1, s_1 s_2, ..., s_1...s_{n-1})``, ``s_i = sin^2 theta_i``.
* ``product(M_1, M_2, ...)``: block-diagonal metric on the concatenated chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .chart import Chart, Manifold, MetricSource
from .coefficients import gamma_half
from .errors import BadParameter

MAX_SPHERE_DIM = 8
DEFAULT_RESOLUTION = 16


@dataclass(frozen=True)
class Reference:
    """Closed-form pointwise invariants (constant on the manifold) and volume."""

    kappa: float
    ricci_norm2: float
    riemann_norm2: float
    lap_kappa: float
    volume: float

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "ricci_norm2": self.ricci_norm2,
            "riemann_norm2": self.riemann_norm2,
            "lap_kappa": self.lap_kappa,
            "volume": self.volume,
        }


@dataclass(frozen=True)
class CatalogManifold(Manifold):
    reference: Optional[Reference] = None


def sphere_volume(n: int, r: float = 1.0) -> float:
    """Volume of the round n-sphere of radius r."""
    return 2 * math.pi ** ((n + 1) / 2) * r**n / gamma_half(Fraction(n + 1, 2))


def sphere_reference(n: int, r: float = 1.0) -> Reference:
    return Reference(
        kappa=n * (n - 1) / r**2,
        ricci_norm2=n * (n - 1) ** 2 / r**4,
        riemann_norm2=2 * n * (n - 1) / r**4,
        lap_kappa=0.0,
        volume=sphere_volume(n, r),
    )


def _real(x):
    """Float array keeping extended precision when the caller asks for it."""
    x = np.asarray(x)
    return x if x.dtype == np.longdouble else x.astype(np.float64)


class FlatMetric(MetricSource):
    exact_derivatives = True

    def __init__(self, dim: int):
        self.dim = dim

    def metric_at(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(self.dim), x.shape[:-1] + (self.dim, self.dim)).copy()

    def d_metric_at(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (self.dim,) * 3)

    def dd_metric_at(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (self.dim,) * 4)


class SphereMetric(MetricSource):
    """Round metric in hyperspherical angles, with closed-form derivatives.

    Diagonal entry ``m`` is ``r^2`` times the product of ``sin^2`` of the
    first ``m`` angles; derivatives replace individual factors by
    ``sin 2theta`` or ``2 cos 2theta``, so nothing divides by ``sin``.
    """

    exact_derivatives = True

    def __init__(self, dim: int, radius: float = 1.0):
        self.dim = dim
        self.radius = radius

    def _factors(self, x):
        theta = _real(x)[..., : self.dim - 1]
        return np.sin(theta) ** 2, np.sin(2 * theta), 2 * np.cos(2 * theta)

    def _entry(self, s0, m, replace):
        """r^2 * prod_{i<m} factor_i where ``replace`` maps axis -> factor array."""
        out = np.full(s0.shape[:-1], self.radius**2, dtype=s0.dtype)
        for i in range(m):
            out = out * replace.get(i, s0[..., i])
        return out

    def metric_at(self, x):
        s0, _, _ = self._factors(x)
        n = self.dim
        g = np.zeros(s0.shape[:-1] + (n, n), dtype=s0.dtype)
        for m in range(n):
            g[..., m, m] = self._entry(s0, m, {})
        return g

    def d_metric_at(self, x):
        s0, s1, _ = self._factors(x)
        n = self.dim
        dg = np.zeros(s0.shape[:-1] + (n, n, n), dtype=s0.dtype)
        for m in range(n):
            for a in range(m):
                dg[..., a, m, m] = self._entry(s0, m, {a: s1[..., a]})
        return dg

    def dd_metric_at(self, x):
        s0, s1, s2 = self._factors(x)
        n = self.dim
        ddg = np.zeros(s0.shape[:-1] + (n, n, n, n), dtype=s0.dtype)
        for m in range(n):
            for a in range(m):
                ddg[..., a, a, m, m] = self._entry(s0, m, {a: s2[..., a]})
                for b in range(a + 1, m):
                    v = self._entry(s0, m, {a: s1[..., a], b: s1[..., b]})
                    ddg[..., a, b, m, m] = v
                    ddg[..., b, a, m, m] = v
        return ddg


class ProductMetric(MetricSource):
    def __init__(self, factors: Sequence[MetricSource]):
        self.factors = list(factors)
        self.dims = [f.dim for f in self.factors]
        self.dim = sum(self.dims)
        self.offsets = np.cumsum([0] + self.dims)
        self.exact_derivatives = all(f.exact_derivatives for f in self.factors)

    def _blocks(self, x, method, rank):
        x = _real(x)
        n = self.dim
        out = np.zeros(x.shape[:-1] + (n,) * (rank + 2), dtype=x.dtype)
        for f, lo, hi in zip(self.factors, self.offsets[:-1], self.offsets[1:]):
            block = getattr(f, method)(x[..., lo:hi])
            idx = (Ellipsis,) + (slice(lo, hi),) * (rank + 2)
            out[idx] = block
        return out

    def metric_at(self, x):
        return self._blocks(x, "metric_at", 0)

    def d_metric_at(self, x):
        return self._blocks(x, "d_metric_at", 1)

    def dd_metric_at(self, x):
        return self._blocks(x, "dd_metric_at", 2)


class PermutedMetric(MetricSource):
    """Relabel coordinates: new axis ``a`` is old axis ``perm[a]``."""

    def __init__(self, base: MetricSource, perm: Sequence[int]):
        self.base = base
        self.perm = np.asarray(perm)
        self.inverse = np.argsort(self.perm)
        self.dim = base.dim
        self.exact_derivatives = base.exact_derivatives

    def _old(self, y):
        return _real(y)[..., self.inverse]

    def _reindex(self, arr, rank):
        for axis in range(rank):
            arr = np.take(arr, self.perm, axis=arr.ndim - rank + axis)
        return arr

    def metric_at(self, y):
        return self._reindex(self.base.metric_at(self._old(y)), 2)

    def d_metric_at(self, y):
        return self._reindex(self.base.d_metric_at(self._old(y)), 3)

    def dd_metric_at(self, y):
        return self._reindex(self.base.dd_metric_at(self._old(y)), 4)


def _resolution(resolution, n):
    if resolution is None:
        resolution = DEFAULT_RESOLUTION
    if np.isscalar(resolution):
        return (int(resolution),) * n
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != n:
        raise BadParameter(f"resolution needs {n} entries, got {len(resolution)}")
    return resolution


def flat_torus(*sides: float, resolution=None) -> CatalogManifold:
    if len(sides) == 1 and not np.isscalar(sides[0]):
        sides = tuple(sides[0])
    if not sides:
        raise BadParameter("a torus needs at least one side length")
    sides = tuple(float(L) for L in sides)
    if any(not (L > 0 and math.isfinite(L)) for L in sides):
        raise BadParameter(f"torus side lengths must be positive, got {sides}")
    n = len(sides)
    volume = math.prod(sides)
    chart = Chart(n, (0.0,) * n, sides, _resolution(resolution, n), (True,) * n, True, volume)
    return CatalogManifold(
        chart,
        FlatMetric(n),
        "flat_torus",
        {"sides": list(sides)},
        Reference(0.0, 0.0, 0.0, 0.0, volume),
    )


def sphere(n: int, r: float = 1.0, resolution=None) -> CatalogManifold:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_SPHERE_DIM:
        raise BadParameter(f"sphere dimension must be in 1..{MAX_SPHERE_DIM}, got {n!r}")
    n = int(n)
    r = float(r)
    if not (r > 0 and math.isfinite(r)):
        raise BadParameter(f"sphere radius must be positive, got {r}")
    ref = sphere_reference(n, r)
    chart = Chart(
        n,
        (0.0,) * n,
        (math.pi,) * (n - 1) + (2 * math.pi,),
        _resolution(resolution, n),
        (False,) * (n - 1) + (True,),
        True,
        ref.volume,
    )
    return CatalogManifold(chart, SphereMetric(n, r), "sphere", {"dim": n, "radius": r}, ref)


def product(*factors: CatalogManifold, resolution=None) -> CatalogManifold:
    if len(factors) == 1 and not isinstance(factors[0], Manifold):
        factors = tuple(factors[0])
    if len(factors) < 2:
        raise BadParameter("a product needs at least two factors")
    charts = [f.chart for f in factors]
    n = sum(c.dim for c in charts)
    res = sum((c.resolution for c in charts), ())
    if resolution is not None:
        res = _resolution(resolution, n)
    homogeneous = all(c.homogeneous for c in charts)
    volume = math.prod(c.exact_volume for c in charts) if homogeneous else None
    chart = Chart(
        n,
        sum((c.lower for c in charts), ()),
        sum((c.upper for c in charts), ()),
        res,
        sum((c.periodic for c in charts), ()),
        homogeneous,
        volume,
    )
    refs = [f.reference for f in factors]
    ref = None
    if all(r is not None for r in refs):
        ref = Reference(
            sum(r.kappa for r in refs),
            sum(r.ricci_norm2 for r in refs),
            sum(r.riemann_norm2 for r in refs),
            0.0,
            math.prod(r.volume for r in refs),
        )
    source = ProductMetric([f.source for f in factors])
    params = {"factors": [{"name": f.name, **f.parameters} for f in factors]}
    return CatalogManifold(chart, source, "product", params, ref)


def permuted(m: CatalogManifold, perm: Sequence[int]) -> CatalogManifold:
    """The same manifold with its coordinate axes relabelled."""
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(m.dim)):
        raise BadParameter(f"{perm} is not a permutation of 0..{m.dim - 1}")
    c = m.chart
    pick = lambda t: tuple(t[p] for p in perm)  # noqa: E731
    chart = Chart(
        c.dim, pick(c.lower), pick(c.upper), pick(c.resolution), pick(c.periodic),
        c.homogeneous, c.exact_volume,
    )
    params = dict(m.parameters, permutation=perm)
    return CatalogManifold(chart, PermutedMetric(m.source, perm), m.name, params, m.reference)


def build(name: str, resolution=None, **params) -> CatalogManifold:
    """Build a catalog manifold by name.

    ``sphere`` takes ``dim`` and ``radius``; ``flat_torus`` (alias
    ``torus``) takes ``sides``; ``product`` takes ``factors``, a list of
    ``(name, params)`` pairs or already-built manifolds.
    """
    allowed = {"sphere": {"dim", "radius"}, "flat_torus": {"sides"}, "torus": {"sides"}, "product": {"factors"}}
    if name not in allowed:
        raise BadParameter(f"unknown catalog manifold {name!r}")
    extra = set(params) - allowed[name]
    if extra:
        raise BadParameter(f"unexpected parameters for {name!r}: {sorted(extra)}")
    try:
        if name == "sphere":
            return sphere(params["dim"], params.get("radius", 1.0), resolution=resolution)
        if name in ("flat_torus", "torus"):
            return flat_torus(*params["sides"], resolution=resolution)
        factors = []
        for f in params["factors"]:
            if isinstance(f, Manifold):
                factors.append(f)
            else:
                fname, fparams = f
                factors.append(build(fname, **fparams))
        return product(*factors, resolution=resolution)
    except KeyError as exc:
        raise BadParameter(f"missing parameter {exc} for catalog manifold {name!r}") from None
