"""Dimension constants of the lower dimensional volumes.

All Gamma values that enter the constants are taken at integer or
half-integer arguments and are evaluated through exact factorial
recursions, never through a general Gamma routine, so results are
deterministic to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real

from .errors import BadParameter

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True, order=True)
class HalfInteger:
    """The positive number ``twice_value / 2``."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, int) or self.twice_value < 1:
            raise BadParameter(f"twice_value must be a positive integer, got {self.twice_value!r}")

    @classmethod
    def of(cls, q) -> "HalfInteger":
        """Coerce ``q`` (int, Fraction, float or HalfInteger) to a half integer."""
        if isinstance(q, HalfInteger):
            return q
        if not isinstance(q, (Real, Fraction)):
            raise BadParameter(f"not a real number: {q!r}")
        twice = Fraction(q) * 2
        if twice.denominator != 1:
            raise BadParameter(f"{q!r} is not a multiple of 1/2")
        return cls(int(twice))

    @property
    def value(self) -> float:
        return self.twice_value / 2

    def __float__(self) -> float:
        return self.value


@lru_cache(maxsize=None)
def _gamma_twice(twice: int) -> float:
    if twice % 2 == 0:
        return float(math.factorial(twice // 2 - 1))
    m = (twice - 1) // 2
    # Gamma(m + 1/2) = (2m)! sqrt(pi) / (4^m m!)
    ratio = Fraction(math.factorial(2 * m), 4**m * math.factorial(m))
    return float(ratio) * SQRT_PI


def gamma_half(q) -> float:
    """Gamma function at an integer or half-integer argument ``q >= 1/2``."""
    return _gamma_twice(HalfInteger.of(q).twice_value)


def _check_dimension(n) -> int:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise BadParameter(f"dimension must be an integer >= 1, got {n!r}")
    return n


def length_scale(n: int) -> float:
    """Constant in front of ``|D|^-1`` in the noncommutative length element.

    Even ``n`` gives ``sqrt(2 pi) Gamma(n/2 + 1)^(1/n)``; odd ``n`` carries an
    extra factor ``2^(1/(2n))``.
    """
    n = _check_dimension(n)
    c = math.sqrt(2 * math.pi) * gamma_half(Fraction(n, 2) + 1) ** (1 / n)
    if n % 2:
        c *= 2 ** (1 / (2 * n))
    return c


def vanishes(n: int, k: int) -> bool:
    """Parity rule: the k-volume of an n-manifold is zero when n - k is odd."""
    return (n - k) % 2 == 1


@dataclass(frozen=True)
class CoefficientSet:
    n: int
    k: int
    vanishes: bool
    coefficient: float
    length_scale: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "vanishes": self.vanishes,
            "coefficient": self.coefficient,
            "length_scale": self.length_scale,
        }


def nu(n: int, k: int) -> CoefficientSet:
    """Coefficient converting the integrated weight-(n-k)/2 invariant into Vol^(k).

    Examples
    --------
    >>> round(nu(4, 2).coefficient, 10)
    0.1125395395
    >>> nu(6, 3).vanishes
    True
    """
    n = _check_dimension(n)
    if isinstance(k, bool) or not isinstance(k, int) or not 1 <= k <= n:
        raise BadParameter(f"order k must be an integer with 1 <= k <= n={n}, got {k!r}")
    scale = length_scale(n)
    if vanishes(n, k):
        return CoefficientSet(n, k, True, 0.0, scale)

    ratio = gamma_half(Fraction(n, 2) + 1) ** (k / n) / gamma_half(Fraction(k, 2) + 1)
    if n % 2 == 0:
        coefficient = (k / n) * (2 * math.pi) ** ((k - n) / 2) * ratio
    else:
        exponent = (k - n) * (n + 1) / (2 * n)
        coefficient = (k / n) * 2**exponent * math.pi ** ((k - n) / 2) * ratio
    return CoefficientSet(n, k, False, coefficient, scale)


def coefficient_table(n: int) -> list[CoefficientSet]:
    return [nu(n, k) for k in range(1, n + 1)]
