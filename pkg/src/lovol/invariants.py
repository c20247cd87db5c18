"""Local Riemannian invariants of weight 0, 1 and 2.

These are the normalized heat-coefficient densities of the squared Dirac
operator, written as curvature polynomials that do not depend on the
dimension:

    alpha_0 = 1
    alpha_1 = -kappa / 12
    alpha_2 = -(12 Delta_g kappa - 5 kappa^2 + 8 |rho|^2 + 7 |R|^2) / 1440

Weights 3 and higher are rejected rather than guessed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParameter, UnsupportedWeight

MAX_WEIGHT = 2


@dataclass(frozen=True)
class AlphaValues:
    alpha0: float
    alpha1: float
    alpha2: float


def _field(p, name):
    if isinstance(p, dict):
        return p[name]
    return getattr(p, name)


def check_weight(j: int) -> int:
    if isinstance(j, bool) or not isinstance(j, (int, np.integer)) or j < 0:
        raise BadParameter(f"weight must be a nonnegative integer, got {j!r}")
    if j > MAX_WEIGHT:
        raise UnsupportedWeight(int(j))
    return int(j)


def alpha(p, j: int):
    """Weight-``j`` invariant from curvature data.

    ``p`` is a :class:`~lovol.curvature.CurvaturePoint` or any mapping with
    the keys ``kappa``, ``ricci_norm2``, ``riemann_norm2`` and
    ``lap_kappa``; array-valued fields give array results.
    """
    j = check_weight(j)
    if j == 0:
        return np.ones_like(np.asarray(_field(p, "kappa"), dtype=float))[()] * 1.0
    kappa = np.asarray(_field(p, "kappa"), dtype=float)
    if j == 1:
        return (-kappa / 12)[()]
    lap = np.asarray(_field(p, "lap_kappa"), dtype=float)
    rho2 = np.asarray(_field(p, "ricci_norm2"), dtype=float)
    r2 = np.asarray(_field(p, "riemann_norm2"), dtype=float)
    return (-(12 * lap - 5 * kappa**2 + 8 * rho2 + 7 * r2) / 1440)[()]


def alphas(p) -> AlphaValues:
    return AlphaValues(*(alpha(p, j) for j in range(MAX_WEIGHT + 1)))


def constant_curvature_alpha2(n: int, r: float = 1.0) -> float:
    """alpha_2 on the round n-sphere of radius r, from the closed-form invariants."""
    kappa = n * (n - 1) / r**2
    rho2 = n * (n - 1) ** 2 / r**4
    r2 = 2 * n * (n - 1) / r**4
    return -(-5 * kappa**2 + 8 * rho2 + 7 * r2) / 1440
