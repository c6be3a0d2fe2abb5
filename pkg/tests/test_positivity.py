import numpy as np
import pytest

from nelson_ibc.errors import DegenerateNumerics
from nelson_ibc.fock import FockVector
from nelson_ibc.model import ModelParams
from nelson_ibc.ops_core import build_core
from nelson_ibc.positivity import (Cone, certify_improves, certify_preserves, flip_matrix,
                                   flip_vector, is_in_cone, perron_frobenius_check)
from nelson_ibc.resolvent import build_hamiltonian

PLUS, MINUS = Cone("C_plus"), Cone("C_minus")


def test_cone_membership(tiny_basis):
    vac = FockVector.vacuum(tiny_basis)
    assert is_in_cone(vac, PLUS) and is_in_cone(vac, MINUS)
    e = FockVector.indicator(tiny_basis, (1,))
    assert is_in_cone(e, PLUS) and not is_in_cone(e, MINUS)
    flipped = FockVector(tiny_basis, flip_vector(e, tiny_basis))
    assert is_in_cone(flipped, MINUS) and not is_in_cone(flipped, PLUS)
    with pytest.raises(ValueError):
        Cone("C_zero")


def test_certificates_on_small_matrices():
    assert certify_preserves(np.eye(4)).holds
    assert certify_improves(np.ones((4, 4))).holds
    D = np.diag([1.0, 2.0, 3.0])
    assert certify_preserves(D).holds and not certify_improves(D).holds
    A = np.ones((3, 3))
    A[1, 2] = -0.5
    rep = certify_preserves(A)
    assert not rep.holds and rep.witness == (1, 2) and rep.min_entry == -0.5


def test_witness_names_basis_elements(tiny_basis):
    A = np.ones((tiny_basis.dim,) * 2)
    A[3, 0] = -1.0
    rep = certify_preserves(A, PLUS, tiny_basis)
    assert rep.witness_elements == (tiny_basis.element(3), ())


def test_minus_T_od_preserves(ref_basis, params):
    core = build_core(ref_basis, params, 2.0)
    assert certify_preserves(-core.T_od, PLUS).holds


def test_R0_improves(ref_basis, params):
    b = build_hamiltonian(ref_basis, params, 2.0)
    rep = certify_improves(b.R0, PLUS, ref_basis)
    assert rep.holds and rep.min_entry > 0


def test_free_field_pf(ref_basis):
    b = build_hamiltonian(ref_basis, ModelParams(g=0.0), 1.0)
    rep = perron_frobenius_check(b.H_G, ref_basis.mu, PLUS, ref_basis)
    assert rep.ground_energy == pytest.approx(0.0, abs=1e-12)
    assert rep.gap > 0 and not rep.eigenvector_positive
    assert abs(rep.eigenvector[0]) == pytest.approx(1.0)


def test_interacting_pf(ref_basis, params):
    b = build_hamiltonian(ref_basis, params, 2.0)
    rep = perron_frobenius_check(b.H_G, ref_basis.mu, PLUS, ref_basis)
    assert rep.gap > 1e-8 and rep.eigenvector_positive


def test_flipped_coupling(ref_basis, params):
    b = build_hamiltonian(ref_basis, params, 2.0)
    f = build_hamiltonian(ref_basis, ModelParams(g=1.0), 2.0)
    assert np.abs(flip_matrix(b.H_G, ref_basis) - f.H_G).max() <= 1e-12 * np.abs(f.H_G).max()
    rep = perron_frobenius_check(f.H_G, ref_basis.mu, MINUS, ref_basis)
    assert rep.eigenvector_positive
    assert not perron_frobenius_check(f.H_G, ref_basis.mu, PLUS, ref_basis).eigenvector_positive
    assert certify_improves(f.R0, MINUS, ref_basis).holds


def test_degenerate_gap_raises(tiny_basis):
    H = np.diag(np.r_[1.0, 1.0, np.arange(2.0, tiny_basis.dim)])
    with pytest.raises(DegenerateNumerics):
        perron_frobenius_check(H, tiny_basis.mu)


def test_C_minus_requires_basis():
    with pytest.raises(ValueError):
        certify_preserves(np.eye(2), MINUS)
