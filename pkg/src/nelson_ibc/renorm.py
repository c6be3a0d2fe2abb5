"""Cutoff Hamiltonians and the convergence study against the boundary-condition build.

``H_Lam = L_P + a(v_Lam) + a*(v_Lam)`` uses the form factor restricted to
grid nodes with ``|k| <= Lam``; ``E_Lam = -<v_Lam, (k^2 + omega)^-1 v_Lam>`` is
the continuum self-energy. The study compares ``(H_Lam - E_Lam + lam)^-1``
with the resolvent of the boundary-condition Hamiltonian built with the
continuum ``T_d``. Because the grid stops at ``r_max``, the differences level
off at a floor of the size of the ``T_d`` tail correction, which is reported
next to them.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig
from .grid import TailQuadrature, integrate_radial
from .norms import op_norm, weighted_eigh
from .ops_core import (L_P_diagonal, assemble_annihilation, assemble_creation,
                       node_form_factor, tail_correction)
from .resolvent import build_hamiltonian, dense_resolvent

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("Lambda", "E_Lambda", "resolvent_diff", "E0_cutoff", "E0_ibc",
               "saturation_floor")


def self_energy_integrand(r, m):
    w = math.sqrt(r * r + m * m)
    return r * r / (w * (r * r + w))


def compute_E_Lambda(params, Lam, tail=None):
    """``-4 pi g^2 int_0^Lam r^2 / (omega (r^2 + omega)) dr``.

    For ``m = 0`` this equals ``-4 pi g^2 log(1 + Lam)``.
    """
    if Lam < 0:
        raise ValueError("cutoff must be non-negative")
    if Lam == 0 or params.g == 0:
        return 0.0
    tail = tail or TailQuadrature()
    m = params.m
    # split the half-line at the cutoff so the infinite panel is identically zero
    at_cutoff = TailQuadrature(Lam, tail.n_tail, tail.tolerance)
    val = integrate_radial(
        lambda r: self_energy_integrand(r, m) if r <= Lam else 0.0, at_cutoff)
    return -4 * math.pi * params.g ** 2 * val


def closed_form_E_Lambda(g, Lam):
    """Massless self-energy ``-4 pi g^2 log(1 + Lam)``."""
    return -4 * math.pi * g * g * math.log1p(Lam)


def build_H_cutoff(basis, params, Lam, E_Lam=0.0):
    """``L_P + a(v_Lam) + a*(v_Lam) - E_Lam`` as a dense matrix."""
    mu = basis.mu
    v = node_form_factor(basis.grid, params, cutoff=Lam)
    H = np.diag(L_P_diagonal(basis, params))
    H += assemble_annihilation(basis, mu, params, v).toarray()
    H += assemble_creation(basis, mu, params, v).toarray()
    H -= E_Lam * np.eye(basis.dim)
    return H


@dataclass(eq=False)
class CutoffFamily:
    basis: object
    params: object
    lambdas_uv: list
    E: list
    H: list = field(repr=False)
    masks: list = field(repr=False)

    def subtracted(self, i):
        return self.H[i] - self.E[i] * np.eye(self.basis.dim)


def build_cutoff_family(basis, params, lambdas_uv, tail=None):
    lambdas_uv = [float(x) for x in lambdas_uv]
    if sorted(lambdas_uv) != lambdas_uv:
        raise InvalidConfig("cutoffs must be ascending")
    if any(L > basis.grid.r_max for L in lambdas_uv):
        raise InvalidConfig(f"cutoffs must not exceed r_max={basis.grid.r_max}")
    E = [compute_E_Lambda(params, L, tail) for L in lambdas_uv]
    H = [build_H_cutoff(basis, params, L) for L in lambdas_uv]
    masks = [basis.grid.radii <= L for L in lambdas_uv]
    return CutoffFamily(basis, params, lambdas_uv, E, H, masks)


@dataclass
class ConvergenceRow:
    Lambda: float
    E_Lambda: float
    resolvent_diff: float
    E0_cutoff: float
    E0_ibc: float
    saturation_floor: float


@dataclass
class ConvergenceStudy:
    rows: list
    lam_eval: float
    lam_build: float
    E0_unsubtracted: list

    def column(self, name):
        return [getattr(r, name) for r in self.rows]

    def strictly_decreasing(self, name="resolvent_diff"):
        c = self.column(name)
        return all(b < a for a, b in zip(c, c[1:]))

    def unsubtracted_strictly_decreasing(self):
        c = self.E0_unsubtracted
        return all(b < a for a, b in zip(c, c[1:]))

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in self.rows:
                w.writerow([repr(float(getattr(r, c))) for c in CSV_COLUMNS])


def convergence_study(family, ibc_build=None, lam_eval=None, lam_build=1.0,
                      tail=None, mode="continuum"):
    """Resolvent differences ``||(H_P + lam)^-1 - (H_Lam - E_Lam + lam)^-1||``.

    ``ibc_build`` defaults to the boundary-condition Hamiltonian in ``mode``
    at ``lam_build``. ``lam_eval`` defaults to one above minus the lowest
    ground energy in the table (and at least 1).
    """
    basis, params = family.basis, family.params
    mu = basis.mu
    if ibc_build is None:
        ibc_build = build_hamiltonian(basis, params, lam_build, tail, mode)
    H_P = ibc_build.H_G
    E0_ibc = float(weighted_eigh(H_P, mu)[0][0])
    E0_sub = [float(weighted_eigh(family.subtracted(i), mu)[0][0])
              for i in range(len(family.lambdas_uv))]
    E0_raw = [float(weighted_eigh(H, mu)[0][0]) for H in family.H]
    if lam_eval is None:
        lam_eval = max(1.0, 1.0 - min([E0_ibc] + E0_sub))
    R_P = dense_resolvent(H_P, lam_eval)
    if params.g == 0:
        floor = 0.0
    else:
        floor = float(np.abs(tail_correction(basis, params, ibc_build.lam, tail)).max())
    rows = []
    for i, Lam in enumerate(family.lambdas_uv):
        R = dense_resolvent(family.subtracted(i), lam_eval)
        diff = op_norm(R_P - R, mu)
        logger.info("Lambda=%g  diff=%.4g  E0=%.4g", Lam, diff, E0_sub[i])
        rows.append(ConvergenceRow(Lam, family.E[i], diff, E0_sub[i], E0_ibc, floor))
    return ConvergenceStudy(rows, float(lam_eval), float(ibc_build.lam), E0_raw)
