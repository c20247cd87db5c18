import math

import mpmath
import numpy as np
import pytest

from lovol import catalog
from lovol.chart import Chart, FunctionMetric, Manifold, sample
from lovol.errors import BadParameter, UnsupportedWeight
from lovol.volumes import full_report, integrate_alpha, lower_volume

from conftest import oracle_nu, oracle_sphere_volume


def oracle_sphere_alpha(n, j, r):
    kappa = mpmath.mpf(n * (n - 1)) / r**2
    if j == 0:
        return mpmath.mpf(1)
    if j == 1:
        return -kappa / 12
    rho2 = mpmath.mpf(n * (n - 1) ** 2) / r**4
    r2 = mpmath.mpf(2 * n * (n - 1)) / r**4
    return -(-5 * kappa**2 + 8 * rho2 + 7 * r2) / 1440


def oracle_sphere_volume_k(n, k, r):
    if (n - k) % 2:
        return 0.0
    alpha = oracle_sphere_alpha(n, (n - k) // 2, mpmath.mpf(r))
    return float(oracle_nu(n, k) * alpha * oracle_sphere_volume(n, r))


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_sphere_homogeneous_against_oracle(n, r):
    for rep in full_report(catalog.sphere(n, r)):
        expected = oracle_sphere_volume_k(n, rep.k, r)
        assert rep.volume_k == pytest.approx(expected, rel=1e-10, abs=1e-14)
        assert rep.parity_zero == ((n - rep.k) % 2 == 1)


@pytest.mark.parametrize(
    "n,k,value",
    [
        (4, 2, -2.96192195877224),
        (6, 2, 1.01487159202279),
        (3, 1, -0.515611287713356),
        (5, 1, 0.128097142864325),
        (5, 3, -6.64313802489886),
        (6, 4, -14.4838736478966),
    ],
)
def test_frozen_sphere_values(n, k, value):
    assert lower_volume(catalog.sphere(n), k).volume_k == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_four_sphere_area_closed_form(r):
    rep = lower_volume(catalog.sphere(4, r), 2)
    assert rep.volume_k == pytest.approx(-(2 * math.sqrt(2) / 3) * math.pi * r**2, rel=1e-12)
    assert rep.method == "homogeneous" and rep.units == "length^2" and rep.weight == 1


def test_two_sphere_report():
    reps = full_report(catalog.sphere(2, 1.0))
    assert reps[0].parity_zero and reps[0].volume_k == 0.0 and reps[0].method == "parity"
    assert reps[1].volume_k == pytest.approx(4 * math.pi)


def test_unit_cube_torus_report():
    reps = full_report(catalog.flat_torus(1.0, 1.0, 1.0))
    assert [r.volume_k for r in reps] == [0.0, 0.0, 1.0]
    assert [r.parity_zero for r in reps] == [False, True, False]
    assert reps[0].integral_alpha == 0.0


def test_flat_four_torus_vanishes_exactly():
    m = catalog.flat_torus(*(2 * math.pi,) * 4)
    reps = full_report(m, method="quadrature")
    assert [r.volume_k for r in reps[:3]] == [0.0, 0.0, 0.0]
    assert [r.parity_zero for r in reps[:3]] == [True, False, True]


def test_report_consistency():
    for rep in full_report(catalog.sphere(5, 1.3)):
        if not rep.parity_zero:
            assert rep.volume_k == rep.coefficient * rep.integral_alpha


def test_two_sphere_area_by_quadrature():
    m = catalog.sphere(2, 1.0, resolution=(32, 8))
    rep = lower_volume(m, 2, method="quadrature")
    assert rep.volume_k == pytest.approx(4 * math.pi, rel=1e-3)
    assert abs(rep.volume_k - 4 * math.pi) <= 1.5 * rep.error_estimate


def test_three_sphere_length_by_quadrature():
    m = catalog.sphere(3, 1.0, resolution=(32, 32, 4))
    rep = lower_volume(m, 1, method="quadrature")
    assert rep.volume_k == pytest.approx(oracle_sphere_volume_k(3, 1, 1.0), rel=2e-3)


def conformal_torus(a=0.3):
    def metric(x):
        return np.exp(2 * a * np.sin(2 * np.pi * x[..., 0]))[..., None, None] * np.eye(2)

    return FunctionMetric(2, metric, vectorized=True)


def test_gauss_bonnet_on_conformal_torus():
    # total scalar curvature of a torus is 4 pi chi = 0
    m = Manifold(Chart(2, 0.0, 1.0, 32, True), conformal_torus())
    r = integrate_alpha(m, 1, step=1e-3)
    assert abs(r.value) < 1e-8


def test_grid_metric_volume_matches_bessel():
    grid = sample(conformal_torus(0.3), Chart(2, 0.0, 1.0, 32, True))
    rep = lower_volume(grid, 2)
    assert rep.volume_k == pytest.approx(float(mpmath.besseli(0, 0.6)), rel=1e-12)
    # grid derivatives carry O(h^4) differencing error; |kappa| itself is ~40
    assert abs(integrate_alpha(grid, 1).value) < 1e-4


def test_unsupported_weight_is_reported():
    reps = full_report(catalog.sphere(7))
    by_k = {r.k: r for r in reps}
    assert by_k[1].status == "unsupported_weight" and by_k[1].weight == 3
    assert by_k[1].volume_k is None and by_k[1].method == "none"
    assert by_k[3].status == "ok"
    with pytest.raises(UnsupportedWeight):
        lower_volume(catalog.sphere(7), 1)


def test_order_out_of_range():
    with pytest.raises(BadParameter):
        lower_volume(catalog.sphere(3), 4)
