"""Pointwise Riemannian curvature from a metric source.

Every quantity is assembled from the 2-jet ``(g, dg, ddg)`` of the metric
at the evaluation points.  The jet comes either from the source's
closed-form derivatives or from central finite differences of
``metric_at``; the tensor algebra afterwards is shared.

Conventions
-----------
* ``Gamma[k, i, j]`` is the Christoffel symbol with upper index ``k``.
* ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`` and
  ``riemann[i, j, k, l] = <R(d_i, d_j) d_k, d_l>``.
* ``ricci[j, k] = g^{il} riemann[i, j, k, l]`` and ``kappa = g^{jk} ricci[j, k]``.
  With these choices the round sphere of radius r has kappa = n(n-1)/r^2.
* The Laplace-Beltrami operator is the nonnegative one,
  ``Delta f = -(1/sqrt g) d_i(sqrt g g^{ij} d_j f)``.

All functions accept a single point ``(n,)`` or a batch ``(m, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Optional

import numpy as np

from .chart import Chart, MetricSource, inverse_and_density, pivot_condition
from .errors import BadParameter

DEFAULT_STEP = 1e-3
# points whose metric is worse conditioned than this are recomputed in extended precision
CONDITION_LIMIT = 1e6

# first-derivative stencils: (offsets, weights); divide by h
_D1 = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
}
# second-derivative stencils along one axis; divide by h^2
_D2 = {
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    4: ((-2, -1, 0, 1, 2), (-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12)),
}


def _check_order(order):
    if order not in _D1:
        raise BadParameter(f"stencil order must be 2 or 4, got {order!r}")


def _steps(points, chart: Optional[Chart], step, order):
    if step is None:
        step = float(np.min(chart.spacing)) / 2 if chart is not None else DEFAULT_STEP
    if chart is None:
        return np.full(points.shape, float(step))
    return chart.stencil_steps(points, step, reach=order // 2)


def _fd_jet(fn, X, H, order, pairs):
    """Value, gradient and Hessian of ``fn`` at ``X`` by central differences.

    ``fn`` maps ``(m, n)`` points to ``(m, *shape)``.  Only the mixed
    second derivatives listed in ``pairs`` are formed; the others stay zero.
    """
    m, n = X.shape
    off1, w1 = _D1[order]
    off2, w2 = _D2[order]
    axial = [o for o in off2 if o != 0]

    shifts = [np.zeros((m, n))]
    for a in range(n):
        for o in axial:
            s = np.zeros((m, n))
            s[:, a] = o * H[:, a]
            shifts.append(s)
    for a, b in pairs:
        for oa in off1:
            for ob in off1:
                s = np.zeros((m, n))
                s[:, a] = oa * H[:, a]
                s[:, b] = ob * H[:, b]
                shifts.append(s)

    pts = X[None, :, :] + np.stack(shifts)
    vals = fn(pts.reshape(-1, n))
    vals = vals.reshape((len(shifts), m) + vals.shape[1:])
    tail = vals.shape[2:]
    expand = (slice(None),) + (None,) * len(tail)

    f0 = vals[0]
    df = np.zeros((m, n) + tail, dtype=vals.dtype)
    ddf = np.zeros((m, n, n) + tail, dtype=vals.dtype)
    pos = 1
    for a in range(n):
        by_offset = {o: vals[pos + i] for i, o in enumerate(axial)}
        by_offset[0] = f0
        pos += len(axial)
        h = H[:, a][expand]
        df[:, a] = sum(w * by_offset[o] for o, w in zip(off1, w1)) / h
        ddf[:, a, a] = sum(w * by_offset[o] for o, w in zip(off2, w2)) / h**2
    for a, b in pairs:
        acc = 0.0
        for oa, wa in zip(off1, w1):
            for ob, wb in zip(off1, w1):
                acc = acc + wa * wb * vals[pos]
                pos += 1
        acc = acc / (H[:, a][expand] * H[:, b][expand])
        ddf[:, a, b] = acc
        ddf[:, b, a] = acc
    return f0, df, ddf


def metric_jet(source: MetricSource, X, *, chart=None, step=None, order=4, exact=None):
    """Metric, first and second derivatives at points ``X`` of shape (m, n).

    ``exact`` selects the derivative route; by default closed-form
    derivatives are used whenever the source provides them.
    """
    X = np.atleast_2d(np.asarray(X))
    if X.dtype != np.longdouble:
        X = X.astype(np.float64)
    if exact is None:
        exact = source.exact_derivatives
    if exact:
        return source.metric_at(X), source.d_metric_at(X), source.dd_metric_at(X)
    _check_order(order)
    n = X.shape[1]
    H = _steps(X, chart, step, order)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    g, dg, ddg = _fd_jet(source.metric_at, X, H, order, pairs)
    # exact value at the centre; symmetrize away rounding asymmetry
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    return g, dg, ddg


def _christoffel_from_jet(ginv, dg):
    n = dg.shape[-1]
    t = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)  # t[i,j,l]
    flat = t.reshape(t.shape[:-3] + (n * n, n)) @ np.swapaxes(ginv, -1, -2)
    gamma = 0.5 * np.moveaxis(flat, -1, -2).reshape(t.shape)  # gamma[k,i,j]
    return gamma, t


def _raise_first(tensor, ginv):
    """Raise the first tensor index with ``ginv``; batch axis leading."""
    B, n = tensor.shape[0], tensor.shape[1]
    return (ginv @ tensor.reshape(B, n, -1)).reshape(tensor.shape)


def _curvature_from_jet(g, dg, ddg, norms=True):
    B, n = g.shape[0], g.shape[-1]
    ginv, density = inverse_and_density(g)
    gamma, t = _christoffel_from_jet(ginv, dg)
    gT = np.swapaxes(ginv, -1, -2)

    dginv = -(ginv[:, None] @ dg @ ginv[:, None])  # dginv[m,k,l]
    dt = ddg + np.swapaxes(ddg, -3, -2) - np.moveaxis(ddg, -3, -1)  # dt[m,i,j,l]
    first = dginv @ t.reshape(B, 1, n * n, n).swapaxes(-1, -2)  # [m,k,ij]
    second = (dt.reshape(B, n, n * n, n) @ gT[:, None]).swapaxes(-1, -2)  # [m,k,ij]
    dgamma = 0.5 * (first + second).reshape(B, n, n, n, n)  # dgamma[m,k,i,j]

    # rm[l, k, i, j]: R(d_i, d_j) d_k = rm[l, k, i, j] d_l
    deriv = dgamma.transpose(0, 2, 4, 1, 3)  # dgamma[i,l,j,k] -> [l,k,i,j]
    rm = deriv - np.swapaxes(deriv, -1, -2)
    quad = (gamma.reshape(B, n * n, n) @ gamma.reshape(B, n, n * n)).reshape(B, n, n, n, n)
    quad = quad.transpose(0, 1, 4, 2, 3)  # quad[l,i,j,k] -> [l,k,i,j]
    rm = rm + quad - np.swapaxes(quad, -1, -2)
    lowered = (g @ rm.reshape(B, n, n**3)).reshape(B, n, n, n, n)  # [l,k,i,j]
    riemann = np.ascontiguousarray(lowered.transpose(0, 3, 4, 2, 1))

    # ricci[j,k] = g^{il} riemann[i,j,k,l]
    ricci = np.einsum("bijkl,bil->bjk", riemann, ginv)
    ricci = 0.5 * (ricci + np.swapaxes(ricci, -1, -2))
    kappa = np.sum(ginv * ricci, axis=(-1, -2))
    ricci_norm2 = riemann_norm2 = np.full(B, np.nan, dtype=g.dtype)
    if norms:
        ricci_up = ginv @ ricci @ ginv
        ricci_norm2 = np.sum(ricci_up * ricci, axis=(-1, -2))
        up = riemann
        for _ in range(4):
            up = np.moveaxis(_raise_first(up, ginv), 1, -1)
        riemann_norm2 = np.sum(up * riemann, axis=(1, 2, 3, 4))
    return {
        "g": g,
        "ginv": ginv,
        "density": density,
        "gamma": gamma,
        "riemann": riemann,
        "ricci": ricci,
        "kappa": kappa,
        "ricci_norm2": ricci_norm2,
        "riemann_norm2": riemann_norm2,
    }


def _jet_curvature(source, X, norms=True, **kw):
    """Curvature dictionary at ``X``; ill-conditioned points redone in long double."""
    jet = metric_jet(source, X, **kw)
    out = _curvature_from_jet(*jet, norms=norms)
    bad = np.flatnonzero(pivot_condition(jet[0]) > CONDITION_LIMIT)
    if bad.size:
        precise = _curvature_from_jet(*metric_jet(source, X[bad].astype(np.longdouble), **kw), norms=norms)
        for key, value in precise.items():
            out[key][bad] = value
    return out


def _batched(X):
    X = np.asarray(X, dtype=float)
    return np.atleast_2d(X), X.ndim == 1


def _unbatch(value, single):
    return value[0] if single else value


def christoffel(source, x, *, chart=None, step=None, order=4, exact=None):
    """Christoffel symbols ``Gamma[k, i, j]`` of the Levi-Civita connection."""
    X, single = _batched(x)
    g, dg, _ = metric_jet(source, X, chart=chart, step=step, order=order, exact=exact)
    ginv, _ = inverse_and_density(g)
    return _unbatch(_christoffel_from_jet(ginv, dg)[0], single)


def riemann(source, x, *, chart=None, step=None, order=4, exact=None):
    """Return ``(riemann, ricci, kappa)`` with all indices lowered."""
    X, single = _batched(x)
    d = _jet_curvature(source, X, chart=chart, step=step, order=order, exact=exact)
    return tuple(_unbatch(d[key], single) for key in ("riemann", "ricci", "kappa"))


def _chunk_size(n):
    return max(32, 2**18 // n**4)


def curvature_scalars(source, X, *, chart=None, step=None, order=4, exact=None, norms=True):
    """Scalar curvature fields at a batch of points, processed in chunks.

    With ``norms=False`` the squared norms are skipped (left as NaN).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    keys = ("kappa", "ricci_norm2", "riemann_norm2", "density")
    out = {k: np.empty(len(X)) for k in keys}
    size = _chunk_size(X.shape[1])
    if not (exact if exact is not None else source.exact_derivatives):
        size = max(8, size // (1 + 2 * X.shape[1] + 8 * X.shape[1] ** 2))
    for start in range(0, len(X), size):
        sl = slice(start, start + size)
        d = _jet_curvature(source, X[sl], norms=norms, chart=chart, step=step, order=order, exact=exact)
        for k in keys:
            out[k][sl] = d[k]
    return out


def kappa_at(source, X, **kw):
    return curvature_scalars(source, X, norms=False, **kw)["kappa"]


def laplace_beltrami(field: Callable, source, x, *, chart=None, step=None, order=4, exact=None):
    """Nonnegative Laplace-Beltrami operator applied to a scalar field.

    Uses ``Delta f = -(g^{ij} d_i d_j f - g^{ij} Gamma^k_ij d_k f)`` with the
    derivatives of ``f`` taken by central differences of the given order.
    ``field`` maps points ``(m, n)`` to values ``(m,)``.
    """
    _check_order(order)
    X, single = _batched(x)
    n = X.shape[1]
    g, dg, _ = metric_jet(source, X, chart=chart, step=step, order=order, exact=exact)
    ginv, _ = inverse_and_density(g)
    gamma, _ = _christoffel_from_jet(ginv, dg)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n) if np.any(ginv[:, a, b] != 0)]
    H = _steps(X, chart, step, order)
    _, df, ddf = _fd_jet(field, X, H, order, pairs)
    contracted = np.einsum("...ij,...kij->...k", ginv, gamma)
    lap = -(np.einsum("...ij,...ij->...", ginv, ddf) - np.einsum("...k,...k->...", contracted, df))
    return _unbatch(lap, single)


def laplacian_kappa(source, x, *, chart=None, step=None, order=4, exact=None):
    """``Delta_g kappa`` by nested differences of the scalar curvature field."""

    def kappa_field(points):
        return kappa_at(source, points, chart=chart, step=step, order=order, exact=exact)

    return laplace_beltrami(kappa_field, source, x, chart=chart, step=step, order=order, exact=exact)


@dataclass
class CurvaturePoint:
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    kappa: float
    ricci_norm2: float
    riemann_norm2: float
    lap_kappa: float
    density: float

    def scalars(self) -> dict:
        return {
            "kappa": self.kappa,
            "ricci_norm2": self.ricci_norm2,
            "riemann_norm2": self.riemann_norm2,
            "lap_kappa": self.lap_kappa,
            "density": self.density,
        }


def curvature_point(source, x, *, chart=None, step=None, order=4, exact=None, with_laplacian=True):
    """All pointwise curvature data at ``x`` (a single point or a batch)."""
    X, single = _batched(x)
    d = _jet_curvature(source, X, chart=chart, step=step, order=order, exact=exact)
    if with_laplacian:
        lap = laplacian_kappa(source, X, chart=chart, step=step, order=order, exact=exact)
    else:
        lap = np.full(len(X), np.nan)
    values = dict(
        gamma=d["gamma"],
        riemann=d["riemann"],
        ricci=d["ricci"],
        kappa=d["kappa"],
        ricci_norm2=d["ricci_norm2"],
        riemann_norm2=d["riemann_norm2"],
        lap_kappa=lap,
        density=d["density"],
    )
    if single:
        values = {k: (float(v[0]) if np.ndim(v) == 1 else v[0]) for k, v in values.items()}
    return CurvaturePoint(**values)


def symmetry_violations(riemann: np.ndarray) -> dict:
    """Largest violation of each algebraic symmetry of ``riemann[..., i, j, k, l]``."""
    R = riemann
    bianchi = R + np.einsum("...jkil->...ijkl", R) + np.einsum("...kijl->...ijkl", R)
    return {
        "antisym_ij": float(np.max(np.abs(R + np.swapaxes(R, -4, -3)))),
        "antisym_kl": float(np.max(np.abs(R + np.swapaxes(R, -2, -1)))),
        "pair": float(np.max(np.abs(R - np.einsum("...klij->...ijkl", R)))),
        "bianchi": float(np.max(np.abs(bianchi))),
    }


# -- periodic grids -----------------------------------------------------------


def _roll_derivatives(field, spacing, order, pairs, naxes):
    """Periodic central differences of ``field`` whose leading axes are the grid."""
    off1, w1 = _D1[order]
    off2, w2 = _D2[order]

    def shifted(arr, axis, o):
        return np.roll(arr, -o, axis=axis)

    d1 = []
    d2 = {}
    for a in range(naxes):
        h = spacing[a]
        d1.append(sum(w * shifted(field, a, o) for o, w in zip(off1, w1)) / h)
        d2[(a, a)] = sum(w * shifted(field, a, o) for o, w in zip(off2, w2)) / h**2
    for a, b in pairs:
        acc = 0.0
        for oa, wa in zip(off1, w1):
            inner = shifted(field, a, oa)
            for ob, wb in zip(off1, w1):
                acc = acc + wa * wb * shifted(inner, b, ob)
        d2[(a, b)] = d2[(b, a)] = acc / (spacing[a] * spacing[b])
    return d1, d2


def grid_curvature(grid, order=4) -> dict:
    """Curvature scalar fields of a fully periodic sampled metric.

    Derivatives are periodic central differences on the grid itself.
    Returns flat arrays (row-major node order) for ``kappa``,
    ``ricci_norm2``, ``riemann_norm2``, ``lap_kappa`` and ``density``.
    """
    _check_order(order)
    grid.require_periodic()
    n = grid.dim
    res = tuple(grid.chart.resolution)
    spacing = grid.chart.spacing
    g = grid.matrices()
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    d1, d2 = _roll_derivatives(g, spacing, order, pairs, n)
    dg = np.stack(d1, axis=n)  # (*res, a, i, j)
    ddg = np.empty(res + (n, n, n, n))
    for (a, b), v in d2.items():
        ddg[..., a, b, :, :] = v

    N = grid.chart.node_count
    g, dg, ddg = g.reshape(N, n, n), dg.reshape(N, n, n, n), ddg.reshape(N, n, n, n, n)
    keys = ("kappa", "ricci_norm2", "riemann_norm2", "density")
    out = {k: np.empty(N) for k in keys}
    contracted = np.empty((N, n))
    ginv_all = np.empty((N, n, n))
    size = _chunk_size(n)
    for start in range(0, N, size):
        sl = slice(start, start + size)
        d = _curvature_from_jet(g[sl], dg[sl], ddg[sl])
        for k in keys:
            out[k][sl] = d[k]
        ginv_all[sl] = d["ginv"]
        contracted[sl] = np.einsum("...ij,...kij->...k", d["ginv"], d["gamma"])

    kappa = out["kappa"].reshape(res)
    pairs_needed = [(a, b) for a, b in pairs if np.any(ginv_all[:, a, b] != 0)]
    k1, k2 = _roll_derivatives(kappa, spacing, order, pairs_needed, n)
    dk = np.stack([v.reshape(N) for v in k1], axis=-1)
    second = np.zeros(N)
    for (a, b), v in k2.items():
        second += ginv_all[:, a, b] * v.reshape(N)
    out["lap_kappa"] = -(second - np.einsum("mk,mk->m", contracted, dk))
    return out
