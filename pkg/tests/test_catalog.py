import math

import numpy as np
import pytest

from lovol import catalog
from lovol.chart import inverse_and_density
from lovol.errors import BadParameter

from conftest import oracle_sphere_volume


@pytest.mark.parametrize("n", range(1, 9))
def test_sphere_volume_oracle(n):
    assert catalog.sphere_volume(n, 1.7) == pytest.approx(oracle_sphere_volume(n, 1.7), rel=1e-13)


def test_known_volumes():
    assert catalog.sphere_volume(2) == pytest.approx(4 * math.pi)
    assert catalog.sphere_volume(4) == pytest.approx(26.3189450695716, rel=1e-13)


@pytest.mark.parametrize("n", range(1, 7))
def test_sphere_density_integrates_to_volume(n):
    m = catalog.sphere(n)
    c = m.chart
    # density factorizes; integrate each coordinate axis separately at high resolution
    axes = [np.linspace(lo, hi, 4001)[:-1] + (hi - lo) / 8000 for lo, hi in zip(c.lower, c.upper)]
    total = 1.0
    for i, ax in enumerate(axes):
        pts = np.tile(c.center, (len(ax), 1))
        pts[:, i] = ax
        dens = inverse_and_density(m.source.metric_at(pts))[1]
        total *= np.sum(dens) * (c.upper[i] - c.lower[i]) / len(ax)
        if i < n - 1:
            total /= inverse_and_density(m.source.metric_at(c.center[None]))[1][0]
    assert total == pytest.approx(c.exact_volume, rel=1e-6)


def test_sphere_chart_shape():
    c = catalog.sphere(3, resolution=6).chart
    assert c.upper == (math.pi, math.pi, 2 * math.pi)
    assert c.periodic == (False, False, True)
    assert c.homogeneous and c.resolution == (6, 6, 6)


def test_flat_torus():
    m = catalog.flat_torus(1.0, 2.0, 3.0)
    assert m.chart.exact_volume == 6.0 and all(m.chart.periodic)
    assert np.array_equal(m.source.metric_at(np.zeros((2, 3))), np.broadcast_to(np.eye(3), (2, 3, 3)))
    assert catalog.flat_torus([1.0, 2.0]).dim == 2


def test_product_is_block_diagonal():
    m = catalog.product(catalog.sphere(2, 2.0), catalog.flat_torus(1.0, 1.0))
    g = m.source.metric_at(np.array([1.0, 0.5, 0.2, 0.3]))
    assert np.allclose(g, np.diag([4.0, 4 * np.sin(1.0) ** 2, 1.0, 1.0]))
    assert m.reference.kappa == pytest.approx(0.5)
    assert m.chart.exact_volume == pytest.approx(16 * math.pi)


def test_derivative_layout_matches_fd():
    m = catalog.sphere(3, 1.5)
    x = np.array([[0.7, 1.9, 0.4]])
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (m.source.metric_at(x + e) - m.source.metric_at(x - e)) / (2 * h)
        assert np.allclose(m.source.d_metric_at(x)[:, k], fd, atol=1e-8)
        fd2 = (m.source.d_metric_at(x + e) - m.source.d_metric_at(x - e)) / (2 * h)
        assert np.allclose(m.source.dd_metric_at(x)[:, k], fd2, atol=1e-8)


def test_permuted_reorders_chart():
    m = catalog.permuted(catalog.sphere(2), [1, 0])
    assert m.chart.periodic == (True, False)
    with pytest.raises(BadParameter):
        catalog.permuted(catalog.sphere(2), [0, 0])


def test_longdouble_preserved():
    g = catalog.sphere(3).source.metric_at(np.ones((1, 3), dtype=np.longdouble))
    assert g.dtype == np.longdouble


def test_build():
    assert catalog.build("sphere", dim=2, radius=2.0).reference.kappa == pytest.approx(0.5)
    assert catalog.build("torus", sides=[1, 2]).chart.exact_volume == 2.0
    p = catalog.build("product", factors=[("sphere", {"dim": 2}), ("flat_torus", {"sides": [1, 1]})])
    assert p.dim == 4


@pytest.mark.parametrize(
    "call",
    [
        lambda: catalog.build("klein_bottle"),
        lambda: catalog.build("sphere", dim=2, colour="red"),
        lambda: catalog.build("sphere", radius=1.0),
        lambda: catalog.sphere(0),
        lambda: catalog.sphere(9),
        lambda: catalog.sphere(2, -1.0),
        lambda: catalog.flat_torus(1.0, 0.0),
        lambda: catalog.flat_torus(),
        lambda: catalog.product(catalog.sphere(2)),
        lambda: catalog.sphere(2, resolution=(8, 8, 8)),
    ],
)
def test_build_rejects(call):
    with pytest.raises(BadParameter):
        call()
