import math

import numpy as np
import pytest
from scipy import integrate

from nelson_ibc.errors import InvalidConfig, NoConvergence
from nelson_ibc.grid import (TailQuadrature, angular_rule, build_grid, integrate_radial,
                             refine)


def shell_volume(a, b):
    return 4 / 3 * math.pi * (b ** 3 - a ** 3)


def test_degenerate_single_shell():
    g = build_grid(1.0, 1.0, 1, 6, "uniform-shell")
    assert len(g) == 6
    np.testing.assert_allclose(g.radii, 1.0, rtol=0, atol=1e-15)
    np.testing.assert_allclose(g.weights, g.weights[0], rtol=1e-15)
    # surface measure of the unit sphere shared equally
    assert g.volume == pytest.approx(4 * math.pi, rel=1e-14)


def test_product_gauss_volume():
    g = build_grid(0.5, 4.0, 8, 6, "product-gauss")
    assert len(g) == 48
    assert g.volume == pytest.approx(shell_volume(0.5, 4.0), rel=1e-12)


def test_uniform_shell_volume_exact():
    g = build_grid(0.5, 4.0, 5, 14, "uniform-shell")
    assert g.volume == pytest.approx(shell_volume(0.5, 4.0), rel=1e-13)


@pytest.mark.parametrize("kw", [
    dict(r_min=0.0), dict(r_min=-1.0), dict(r_min=2.0, r_max=1.0),
    dict(n_radial=0), dict(n_angular=0), dict(scheme="spiral"),
    dict(r_min=1.0, r_max=1.0),
])
def test_invalid_config(kw):
    with pytest.raises(InvalidConfig):
        build_grid(**kw)


@pytest.mark.parametrize("n_radial", [2, 3, 5])
def test_radial_polynomial_exactness(n_radial):
    g = build_grid(0.5, 4.0, n_radial, 6)
    r = g.radii
    for p in range(g.radial_degree() + 1):
        exact = 4 * math.pi * (4.0 ** (p + 3) - 0.5 ** (p + 3)) / (p + 3)
        assert np.sum(g.weights * r ** p) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("n", [1, 6, 12, 14, 26, 30])
def test_angular_weights_sum_to_sphere(n):
    dirs, w = angular_rule(n)
    assert dirs.shape == (n, 3)
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(4 * math.pi, rel=1e-13)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-14)


def test_grid_invariants(ref_grid):
    assert np.all(ref_grid.weights > 0)
    assert np.all(ref_grid.radii >= ref_grid.r_min - 1e-14)
    assert np.all(ref_grid.radii <= ref_grid.r_max + 1e-14)
    assert len(np.unique(np.round(ref_grid.nodes, 12), axis=0)) == len(ref_grid)
    with pytest.raises(ValueError):
        ref_grid.nodes[0, 0] = 1.0


def test_refinement_changes_shrink():
    # smooth, anisotropic test integrand over the shell
    def f(k):
        r = np.linalg.norm(k, axis=1)
        return np.exp(-0.7 * r) * (1 + 0.3 * k[:, 0] + 0.2 * k[:, 2] ** 2)

    g = build_grid(0.5, 4.0, 2, 6)
    vals = []
    for _ in range(4):
        vals.append(np.sum(g.weights * f(g.nodes)))
        g = refine(g)
    changes = np.abs(np.diff(vals))
    assert np.all(changes[1:] < changes[:-1])


def test_integrate_radial_analytic():
    assert integrate_radial(lambda r: 1 / (r + 1) ** 2) == pytest.approx(1.0, abs=1e-9)


def test_integrate_radial_step_halving_oracle():
    def f(r):
        return r / ((r * r + r) * (r * r + r + 1))

    val = integrate_radial(f)
    assert val > 0
    # composite Simpson on the mapped variable r = t/(1-t), step halved once
    def g(t):
        r = t / (1 - t)
        return f(r) / (1 - t) ** 2 if r > 0 else 1.0

    coarse = integrate.simpson([g(t) for t in np.linspace(0, 1 - 1e-9, 20001)],
                               x=np.linspace(0, 1 - 1e-9, 20001))
    fine = integrate.simpson([g(t) for t in np.linspace(0, 1 - 1e-9, 40001)],
                             x=np.linspace(0, 1 - 1e-9, 40001))
    assert abs(fine - coarse) < 1e-7
    assert val == pytest.approx(fine, abs=1e-6)


def test_integrate_radial_divergent():
    with pytest.raises(NoConvergence):
        integrate_radial(lambda r: 1 / r)


def test_tail_quadrature_validation(ref_grid):
    with pytest.raises(InvalidConfig):
        TailQuadrature(r_tail_max=-1)
    with pytest.raises(InvalidConfig):
        TailQuadrature(tolerance=0)
    with pytest.raises(InvalidConfig):
        TailQuadrature(r_tail_max=3.0).check_against(ref_grid)
    TailQuadrature().check_against(ref_grid)


def test_deterministic_build():
    a, b = build_grid(), build_grid()
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.weights, b.weights)
