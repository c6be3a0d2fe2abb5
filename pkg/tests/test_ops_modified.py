import numpy as np
import pytest

from nelson_ibc.fock import FockVector, adjoint, enumerate_basis
from nelson_ibc.grid import build_grid
from nelson_ibc.model import ModelParams
from nelson_ibc.ops_core import build_core
from nelson_ibc.ops_modified import assemble_F, build_modified, compute_mu0, split_tau


@pytest.fixture(scope="module")
def core(ref_basis, params):
    return build_core(ref_basis, params, 2.0)


@pytest.fixture(scope="module")
def mod(core):
    return build_modified(core)


def test_split_tau_examples(core):
    assert split_tau(np.array([0.0])) == (np.array([0.0]), np.array([0.0]))
    tp, tm = split_tau(np.array([-3.0]))
    assert tp[0] == 0.0 and tm[0] == -3.0
    tp, tm = split_tau(core.T_d)
    assert np.array_equal(tp + tm, core.T_d)
    assert np.all(tp >= 0) and np.all(tm <= 0) and not np.any(tp * tm)


def test_zero_split_reproduces_core(core):
    m = build_modified(core, np.zeros(core.basis.dim), core.T_d)
    assert np.array_equal(m.F.toarray(), core.G.toarray())
    assert np.array_equal(m.S_d, core.T_d)
    assert np.array_equal(m.S_od.toarray(), core.T_od.toarray())


def test_F_unit_node_example():
    g = build_grid(1.0, 1.0, 1, 1, "uniform-shell")
    b = enumerate_basis(g, 1)
    c = build_core(b, ModelParams(m=0.0, g=-1.0), 1.0)
    t = 0.75
    m = build_modified(c, np.full(b.dim, t))
    assert (m.F @ FockVector.vacuum(b).data)[1] == pytest.approx(1 / (3 + t), rel=1e-15)


def test_F_relation_matches_direct(core, mod):
    direct = assemble_F(core, mod.tau_plus, method="direct").toarray()
    assert np.abs(mod.F.toarray() - direct).max() <= 1e-13 * np.abs(direct).max()
    with pytest.raises(ValueError):
        assemble_F(core, mod.tau_plus, method="guess")


def test_F_star_formula(core, mod):
    mu = core.basis.mu
    den = core.L_P + mod.tau_plus + core.lam
    route = -core.a_v.toarray() / den[None, :]
    F_star = mod.F_star.toarray()
    assert np.abs(F_star - route).max() <= 1e-13 * np.abs(route).max()
    assert np.abs(F_star - adjoint(mod.F.toarray(), mu)).max() <= 1e-14 * np.abs(route).max()


def test_F_dominated_by_G(core, mod):
    F, G = mod.F.toarray(), core.G.toarray()
    assert F.min() >= 0 and mod.F_star.matrix.min() >= 0
    assert np.all(F <= G + 1e-15)


def test_S_identity(core, mod):
    S = mod.S.toarray()
    alt = (core.T_od.toarray() + np.diag(mod.tau_minus)
           + mod.F_star.toarray() @ (mod.tau_plus[:, None] * core.G.toarray()))
    assert np.abs(S - alt).max() <= 1e-10 * np.abs(S).max()


def test_S_od_structure(core, mod):
    assert not np.any(mod.S_od.toarray()[0])
    assert not np.any(mod.S_od.toarray()[:, 0])
    assert mod.S_od.matrix.max() <= 0
    assert np.all(np.abs(mod.S_od.toarray()) <= np.abs(core.T_od.toarray()) + 1e-15)


def test_mu0_examples(core, mod):
    assert compute_mu0(np.array([2.5])) == 2.5
    assert compute_mu0(np.array([-1.0, -0.2])) <= 0
    assert mod.mu0 == max(mod.S_d.tolist())
    m = mod.mu0 + 1
    assert np.all(-(mod.S_d - m) > 0)
    assert (-(mod.S.toarray() - m * np.eye(core.basis.dim))).min() >= 0


def test_S_d_excess_bounded_independent_of_lambda(ref_basis, params):
    g = ref_basis.grid
    core = build_core(ref_basis, params, 1.0)
    w_v2_over_omega = np.sum(g.weights * core.v ** 2 / g.radii)
    for lam in (0.5, 2.0, 20.0):
        c = build_core(ref_basis, params, lam)
        m = build_modified(c)
        excess = m.S_d - m.tau_minus
        assert excess.min() >= 0
        assert excess.max() <= w_v2_over_omega
