"""Flat-torus spectra: heat trace and Dixmier-trace slope.

On ``T^n = prod R/L_i Z`` the squared Dirac operator acts as the scalar
Laplacian on each of the ``2^floor(n/2)`` spinor components, so its
spectrum is ``lambda_m = sum (2 pi m_i / L_i)^2`` over ``m in Z^n``, each
with that multiplicity.  Frequencies are truncated to the box
``|m_i| <= cutoff``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .coefficients import gamma_half
from .errors import BadParameter, CutoffTooSmall, InsufficientLadder

TAIL_TOLERANCE = 1e-16
MIN_DIXMIER_CUTOFF = 50
MAX_EIGENVALUES = 50_000_000


def spinor_rank(n: int) -> int:
    return 2 ** (n // 2)


@dataclass(frozen=True)
class TorusSpectrum:
    sides: tuple
    cutoff: int
    eigenvalues: np.ndarray  # sorted, each distinct lattice point once
    multiplicity: int

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def volume(self) -> float:
        return math.prod(self.sides)

    @property
    def first_omitted(self) -> float:
        """Smallest eigenvalue outside the truncation box."""
        return min((2 * math.pi * (self.cutoff + 1) / L) ** 2 for L in self.sides)

    def complete(self) -> np.ndarray:
        """Eigenvalues below :attr:`first_omitted`; this part of the spectrum is exact."""
        return self.eigenvalues[: np.searchsorted(self.eigenvalues, self.first_omitted, side="left")]


def _check_sides(sides):
    sides = tuple(float(L) for L in sides)
    if not sides or any(not (L > 0 and math.isfinite(L)) for L in sides):
        raise BadParameter(f"torus sides must be positive, got {sides}")
    return sides


def torus_spectrum(sides: Sequence[float], cutoff: int, multiplicity: Optional[int] = None) -> TorusSpectrum:
    sides = _check_sides(sides)
    cutoff = int(cutoff)
    if cutoff < 1:
        raise BadParameter(f"cutoff must be >= 1, got {cutoff}")
    n = len(sides)
    if (2 * cutoff + 1) ** n > MAX_EIGENVALUES:
        raise BadParameter(f"cutoff {cutoff} in dimension {n} exceeds {MAX_EIGENVALUES} eigenvalues")
    if multiplicity is None:
        multiplicity = spinor_rank(n)
    m = np.arange(-cutoff, cutoff + 1, dtype=float)
    lam = np.zeros(1)
    for L in sides:
        axis = (2 * np.pi * m / L) ** 2
        lam = (lam[:, None] + axis[None, :]).ravel()
    lam.sort(kind="stable")
    lam.setflags(write=False)
    return TorusSpectrum(sides, cutoff, lam, int(multiplicity))


def required_cutoff(sides: Sequence[float], t: float, tol: float = TAIL_TOLERANCE) -> int:
    """Smallest box cutoff with ``exp(-t lambda_omitted) < tol``."""
    sides = _check_sides(sides)
    radius = math.sqrt(-math.log(tol) / t)
    return max(1, math.ceil(max(sides) * radius / (2 * math.pi)))


def heat_trace(spectrum: TorusSpectrum, t: float) -> float:
    """``multiplicity * sum exp(-t lambda)``, the zero mode included."""
    if not t > 0:
        raise BadParameter(f"time must be positive, got {t}")
    if math.exp(-t * spectrum.first_omitted) >= TAIL_TOLERANCE:
        raise CutoffTooSmall(required_cutoff(spectrum.sides, t))
    terms = np.exp(-t * spectrum.eigenvalues[::-1])  # ascending terms
    return spectrum.multiplicity * math.fsum(terms)


def heat_trace_auto(sides: Sequence[float], t: float, multiplicity: int = 1) -> float:
    return heat_trace(torus_spectrum(sides, required_cutoff(sides, t), multiplicity), t)


def weyl_heat_leading(sides: Sequence[float], t: float, multiplicity: int = 1) -> float:
    """Leading small-time term ``multiplicity * vol / (4 pi t)^(n/2)``."""
    sides = _check_sides(sides)
    return multiplicity * math.prod(sides) / (4 * math.pi * t) ** (len(sides) / 2)


@dataclass(frozen=True)
class DixmierFit:
    slope: float
    intercept: float
    ladder: np.ndarray
    partial_sums: np.ndarray


def characteristic_values(spectrum: TorusSpectrum, power: Optional[float] = None) -> np.ndarray:
    """Decreasing ``lambda^(-power)`` over nonzero complete modes, with multiplicity.

    ``power`` defaults to ``n/2``, the eigenvalues of ``|D|^-n``.
    """
    if power is None:
        power = spectrum.dim / 2
    lam = spectrum.complete()
    lam = lam[lam > 0]  # kernel excluded
    mu = lam ** (-power)
    return np.repeat(mu, spectrum.multiplicity)


def geometric_ladder(n_max: int, base: float = 2.0, start: int = 16) -> np.ndarray:
    if base <= 1:
        raise BadParameter(f"ladder base must exceed 1, got {base}")
    ladder = []
    N = float(start)
    while N <= n_max:
        ladder.append(int(round(N)))
        N *= base
    return np.unique(np.array(ladder, dtype=np.int64))


def dixmier_fit(spectrum: TorusSpectrum, *, base: float = 2.0, start: int = 16,
                power: Optional[float] = None, ladder=None) -> DixmierFit:
    """Fit ``sigma_N = a log N + b`` over a geometric ladder of N."""
    if spectrum.cutoff < MIN_DIXMIER_CUTOFF:
        raise CutoffTooSmall(MIN_DIXMIER_CUTOFF)
    mu = characteristic_values(spectrum, power)
    if ladder is None:
        ladder = geometric_ladder(len(mu), base, start)
    ladder = np.asarray(ladder, dtype=np.int64)
    if len(ladder) < 2:
        raise InsufficientLadder(f"need at least two ladder points, got {len(ladder)}")
    if ladder.max() > len(mu) or ladder.min() < 1:
        raise InsufficientLadder(f"ladder must lie in 1..{len(mu)}")
    sigma = np.cumsum(mu)[ladder - 1]  # sigma_N = sum_{k<N} mu_k
    slope, intercept = np.polyfit(np.log(ladder), sigma, 1)
    return DixmierFit(float(slope), float(intercept), ladder, sigma)


def dixmier_quotient(spectrum: TorusSpectrum, **kw) -> float:
    """Fitted logarithmic slope of the partial sums of characteristic values."""
    return dixmier_fit(spectrum, **kw).slope


def dixmier_prediction(sides: Sequence[float], multiplicity: Optional[int] = None) -> float:
    """Weyl-law value of the Dixmier trace of ``|D|^-n`` on a flat torus.

    ``multiplicity * |S^(n-1)| * vol / (n (2 pi)^n)``; with the spinor rank
    this is ``(2 pi)^(-n/2) vol / Gamma(n/2 + 1)`` in even dimension and the
    same divided by ``sqrt 2`` in odd dimension.
    """
    sides = _check_sides(sides)
    n = len(sides)
    if multiplicity is None:
        multiplicity = spinor_rank(n)
    sphere_area = 2 * math.pi ** (n / 2) / gamma_half(Fraction(n, 2))
    return multiplicity * sphere_area * math.prod(sides) / (n * (2 * math.pi) ** n)


def heat_table(spectrum: TorusSpectrum, times) -> list[tuple[float, float]]:
    return [(float(t), heat_trace(spectrum, float(t))) for t in times]
