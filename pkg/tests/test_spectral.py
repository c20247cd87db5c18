import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lovol.errors import BadParameter, CutoffTooSmall, InsufficientLadder
from lovol.spectral import (
    characteristic_values,
    dixmier_fit,
    dixmier_prediction,
    dixmier_quotient,
    geometric_ladder,
    heat_trace,
    heat_trace_auto,
    required_cutoff,
    spinor_rank,
    torus_spectrum,
)

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def t2_300():
    return torus_spectrum([TWO_PI, TWO_PI], 300)


def test_spectrum_structure():
    s = torus_spectrum([TWO_PI, 2 * TWO_PI], 5)
    assert s.eigenvalues.size == 121
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert np.count_nonzero(s.eigenvalues == 0) == 1
    assert s.eigenvalues[1] == pytest.approx(0.25)  # (2 pi / (4 pi))^2
    assert s.multiplicity == 2


def test_spinor_rank():
    assert [spinor_rank(n) for n in range(1, 7)] == [1, 2, 2, 4, 4, 8]


def test_heat_trace_two_torus():
    s = torus_spectrum([TWO_PI, TWO_PI], required_cutoff([TWO_PI, TWO_PI], 0.01), multiplicity=1)
    assert heat_trace(s, 0.01) == pytest.approx(math.pi / 0.01, rel=1e-9)


def test_heat_trace_large_time():
    s = torus_spectrum([TWO_PI, TWO_PI], 5, multiplicity=1)
    assert heat_trace(s, 50.0) == pytest.approx(1.0, abs=1e-20)


def test_heat_trace_circle():
    assert heat_trace_auto([TWO_PI], 0.04) == pytest.approx(math.sqrt(math.pi / 0.04), rel=1e-9)


def test_heat_trace_multiplicity():
    s1 = torus_spectrum([TWO_PI, TWO_PI], 50, multiplicity=1)
    s2 = torus_spectrum([TWO_PI, TWO_PI], 50)
    assert heat_trace(s2, 0.1) == 2 * heat_trace(s1, 0.1)


def scaled_heat(sides, t=1e-3):
    n = len(sides)
    theta = heat_trace_auto(sides, t, multiplicity=spinor_rank(n))
    return theta * (4 * math.pi * t) ** (n / 2) / spinor_rank(n)


def test_heat_leading_coefficient_three_torus():
    assert scaled_heat([1.0, 1.5, 2.0]) == pytest.approx(3.0, rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.5, 8.0), min_size=1, max_size=2))
def test_heat_leading_coefficient(sides):
    # flat tori have no subleading heat coefficients
    t = 1e-3
    n = len(sides)
    theta = heat_trace_auto(sides, t, multiplicity=spinor_rank(n))
    scaled = theta * (4 * math.pi * t) ** (n / 2) / spinor_rank(n)
    assert scaled == pytest.approx(math.prod(sides), rel=1e-6)


def test_cutoff_too_small_reports_requirement():
    s = torus_spectrum([TWO_PI, TWO_PI], 10)
    with pytest.raises(CutoffTooSmall) as exc:
        heat_trace(s, 1e-3)
    assert exc.value.required == required_cutoff([TWO_PI, TWO_PI], 1e-3)
    s = torus_spectrum([TWO_PI, TWO_PI], exc.value.required)
    heat_trace(s, 1e-3)


def test_kernel_excluded_from_characteristic_values():
    s = torus_spectrum([TWO_PI], 60, multiplicity=1)
    mu = characteristic_values(s)
    assert np.all(np.isfinite(mu)) and mu[0] == 1.0 and mu.size == 120
    assert np.all(np.diff(mu) <= 0)


def test_dixmier_two_torus(t2_300):
    a = dixmier_quotient(t2_300)
    assert a == pytest.approx(TWO_PI, rel=0.05)
    assert dixmier_prediction([TWO_PI, TWO_PI]) == pytest.approx(TWO_PI, rel=1e-14)


def test_dixmier_ladder_base_invariance(t2_300):
    a2 = dixmier_quotient(t2_300, base=2)
    a3 = dixmier_quotient(t2_300, base=3)
    assert abs(a3 / a2 - 1) <= 0.01


def test_dixmier_circle():
    s = torus_spectrum([TWO_PI], 100000, multiplicity=1)
    assert dixmier_quotient(s) == pytest.approx(2.0, rel=0.05)
    assert dixmier_prediction([TWO_PI]) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("sides", [[3.0, 5.0], [TWO_PI, 2.0, 4.0]])
def test_dixmier_matches_prediction(sides):
    cutoff = 300 if len(sides) == 2 else 60
    s = torus_spectrum(sides, cutoff)
    assert dixmier_quotient(s) == pytest.approx(dixmier_prediction(sides), rel=0.05)


def test_dixmier_prediction_even_odd_normalization():
    # even n: (2 pi)^(-n/2) vol / Gamma(n/2 + 1); odd n: same over sqrt 2
    assert dixmier_prediction([1.0] * 4) == pytest.approx((2 * math.pi) ** -2 / 2, rel=1e-14)
    assert dixmier_prediction([1.0] * 3) == pytest.approx(
        (2 * math.pi) ** -1.5 / math.gamma(2.5) / math.sqrt(2), rel=1e-14
    )


def test_dixmier_errors(t2_300):
    with pytest.raises(CutoffTooSmall):
        dixmier_quotient(torus_spectrum([TWO_PI, TWO_PI], 49))
    with pytest.raises(InsufficientLadder):
        dixmier_fit(t2_300, ladder=[100])
    with pytest.raises(InsufficientLadder):
        dixmier_fit(t2_300, ladder=[100, 10**9])


def test_fit_outputs(t2_300):
    fit = dixmier_fit(t2_300)
    assert np.all(np.diff(fit.ladder) > 0)
    assert np.all(np.diff(fit.partial_sums) > 0)
    assert list(geometric_ladder(100, 2, 16)) == [16, 32, 64]


@pytest.mark.parametrize("call", [
    lambda: torus_spectrum([], 5),
    lambda: torus_spectrum([1.0, -1.0], 5),
    lambda: torus_spectrum([1.0], 0),
    lambda: torus_spectrum([1.0] * 4, 1000),
    lambda: heat_trace(torus_spectrum([1.0], 5), 0.0),
    lambda: geometric_ladder(100, base=1.0),
])
def test_bad_inputs(call):
    with pytest.raises(BadParameter):
        call()
