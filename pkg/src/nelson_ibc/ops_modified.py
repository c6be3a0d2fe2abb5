"""Modified representation: absorb the positive part of ``T_d`` into ``L_P``.

``tau_+ = max(T_d, 0)`` and ``tau_- = T_d - tau_+``. The map

    F = -(L_P + tau_+ + lam)^-1 a*(v) = G - (L_P + tau_+ + lam)^-1 tau_+ G

replaces ``G``, and the remainder ``S = S_d + S_od`` collects everything
else. With ``g < 0`` both ``F`` and ``-S_od`` have non-negative entries and
``S_d`` is bounded above, which is what makes ``-(S - mu)`` preserve
positivity for ``mu`` above :func:`compute_mu0`.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fock import SectorBlockMatrix
from .ops_core import off_diagonal_kernel, raising_kernel


def split_tau(T_d):
    T_d = np.asarray(T_d, dtype=float)
    tau_plus = np.maximum(T_d, 0.0)
    return tau_plus, np.minimum(T_d, 0.0)


def assemble_F(core, tau_plus, method="relation"):
    """The modified map ``F``.

    ``method="relation"`` applies ``F = G - (L_P + tau_+ + lam)^-1 tau_+ G``
    to the assembled ``G`` (the form used downstream so that the modified
    representation closes exactly); ``method="direct"`` assembles the
    kernel with the shifted denominator.
    """
    den = core.L_P + tau_plus + core.lam
    if method == "direct":
        return raising_kernel(core.basis, core.params, den, v=core.v, kind="F")
    if method != "relation":
        raise ValueError(f"unknown method {method!r}")
    corr = sp.diags(tau_plus / den) @ core.G.matrix
    return SectorBlockMatrix(core.basis, core.G.matrix - corr, "F")


def S_d_integral(core, tau_plus):
    """``sum_q w_q |v(q)|^2 tau_+(K+q) / ((L+lam)(L+tau_++lam))`` at ``K+q``.

    Zero on the top sector, whose intermediate state is truncated away.
    """
    basis, lam = core.basis, core.lam
    wv2 = basis.grid.weights * core.v * core.v
    L = core.L_P
    out = np.zeros(basis.dim)
    for n in range(basis.n_max):
        up = basis.up(n)
        t = tau_plus[up]
        Lu = L[up]
        out[basis.sector_slice(n)] = (wv2[None, :] * t / ((Lu + lam) * (Lu + t + lam))).sum(axis=1)
    return out


def assemble_S(core, tau_plus, tau_minus):
    """``(S_d, S_od)``; ``S_d`` as an array, ``S_od`` as a sparse operator."""
    S_d = tau_minus + S_d_integral(core, tau_plus)
    den = core.L_P + tau_plus + core.lam
    S_od = off_diagonal_kernel(core.basis, core.params, den, v=core.v, kind="S_od")
    return S_d, S_od


def compute_mu0(S_d):
    """Largest value of ``S_d``; any ``mu > mu0`` makes ``mu - S_d > 0``."""
    return float(np.max(S_d))


@dataclass(eq=False)
class ModifiedOperators:
    core: object
    tau_plus: np.ndarray = field(repr=False)
    tau_minus: np.ndarray = field(repr=False)
    F: SectorBlockMatrix = field(repr=False)
    F_star: SectorBlockMatrix = field(repr=False)
    S_d: np.ndarray = field(repr=False)
    S_od: SectorBlockMatrix = field(repr=False)

    @property
    def lam(self):
        return self.core.lam

    @property
    def mu0(self):
        return compute_mu0(self.S_d)

    @property
    def S(self):
        return SectorBlockMatrix.diagonal(self.core.basis, self.S_d) + self.S_od


def build_modified(core, tau_plus=None, tau_minus=None):
    """Modified operators for ``core``.

    ``tau_plus``/``tau_minus`` default to the split of ``core.T_d``; passing
    them explicitly (e.g. ``tau_plus = 0``, ``tau_minus = T_d``) gives the
    degenerate split used as a control.
    """
    if tau_plus is None:
        tau_plus, tau_minus = split_tau(core.T_d)
    elif tau_minus is None:
        tau_minus = core.T_d - tau_plus
    F = assemble_F(core, tau_plus)
    S_d, S_od = assemble_S(core, tau_plus, tau_minus)
    return ModifiedOperators(core, tau_plus, tau_minus, F,
                             F.adjoint(core.basis.mu), S_d, S_od)
