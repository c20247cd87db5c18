import mpmath
import pytest

mpmath.mp.dps = 40


def oracle_nu(n, k):
    """Dimension constant from mpmath's general Gamma, independent of the engine."""
    n, k = mpmath.mpf(n), mpmath.mpf(k)
    ratio = mpmath.gamma(n / 2 + 1) ** (k / n) / mpmath.gamma(k / 2 + 1)
    if int(n) % 2 == 0:
        return float(k / n * (2 * mpmath.pi) ** ((k - n) / 2) * ratio)
    return float(k / n * mpmath.mpf(2) ** ((k - n) * (n + 1) / (2 * n)) * mpmath.pi ** ((k - n) / 2) * ratio)


def oracle_length_scale(n):
    c = mpmath.sqrt(2 * mpmath.pi) * mpmath.gamma(mpmath.mpf(n) / 2 + 1) ** (mpmath.mpf(1) / n)
    if n % 2:
        c *= mpmath.mpf(2) ** (mpmath.mpf(1) / (2 * n))
    return float(c)


def oracle_sphere_volume(n, r=1):
    return float(2 * mpmath.pi ** (mpmath.mpf(n + 1) / 2) * mpmath.mpf(r) ** n / mpmath.gamma(mpmath.mpf(n + 1) / 2))


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20261015)
