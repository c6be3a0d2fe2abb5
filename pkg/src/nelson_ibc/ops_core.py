"""Assembly of the interior-boundary-condition building blocks.

All operators act on the value representation of :mod:`nelson_ibc.fock`:

* ``L_P`` and ``dGamma(omega)``: diagonal symbols.
* ``a(v)`` (sector n+1 -> n) and ``a*(v)`` (n -> n+1).
* ``G = -(L_P + lam)^-1 a*(v)`` and its adjoint ``G* = -a(v)(L_P + lam)^-1``.
* ``T = T_d + T_od``, the diagonal and sector-preserving remainders of
  ``-a(v)(L_P + lam)^-1 a*(v)`` after subtracting the vacuum self-energy.

Truncation: raising operators out of sector ``n_max`` are dropped. Every
integral over an intermediate boson ``xi`` in ``T`` describes a virtual state
in sector ``n + 1``; on the grid those contributions are dropped together
with it for ``n = n_max``. This keeps ``T_lam - T_mu = (lam - mu) G_lam* G_mu``
exact in the truncated space.

``T_d`` comes in two flavours:

``mode="grid"``
    every xi-integral is the grid quadrature. Operator identities then close
    to rounding error.
``mode="continuum"``
    the xi-integral of ``T_d`` is evaluated over all of R^3 by exact angular
    reduction plus adaptive radial quadrature. In the top sector only the
    part the grid cannot represent (the quadrature tail) is added.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import SectorBlockMatrix, remove
from .grid import TailQuadrature, integrate_radial
from .model import form_factor, omega

MODES = ("grid", "continuum")


def node_form_factor(grid, params, cutoff=None):
    """``v`` at the grid nodes; nodes with ``|k| > cutoff`` are zeroed."""
    v = np.asarray(form_factor(grid.nodes, params), dtype=float)
    if cutoff is not None:
        v = np.where(grid.radii <= cutoff, v, 0.0)
    return v


def _element_totals(basis):
    """Per basis element: summed momentum (dim, 3) and node lists."""
    nodes = basis.grid.nodes
    ksum = np.zeros((basis.dim, 3))
    for n in range(1, basis.n_max + 1):
        ksum[basis.sector_slice(n)] = nodes[basis.sectors[n]].sum(axis=1)
    return ksum


def field_energy_diagonal(basis, params):
    w = omega(basis.grid.nodes, params.m)
    out = np.zeros(basis.dim)
    for n in range(1, basis.n_max + 1):
        out[basis.sector_slice(n)] = w[basis.sectors[n]].sum(axis=1)
    return out


def L_P_diagonal(basis, params):
    p = params.P_vec[None, :] - _element_totals(basis)
    return np.sum(p * p, axis=1) + field_energy_diagonal(basis, params)


def total_momentum_residual(basis, params):
    """``|P - sum_j k_j|`` per basis element."""
    p = params.P_vec[None, :] - _element_totals(basis)
    return np.linalg.norm(p, axis=1)


def assemble_dGamma_omega(basis, params):
    return SectorBlockMatrix.diagonal(basis, field_energy_diagonal(basis, params),
                                      kind="dGamma(omega)")


def assemble_annihilation(basis, mu, params, v=None):
    """``(a(v) psi)^(n)(K) = sqrt(n+1) sum_q w_q v(q) psi^(n+1)(K + q)``.

    ``mu`` is accepted for signature symmetry with the other assemblers; the
    kernel itself only needs the grid weights.
    """
    grid = basis.grid
    v = node_form_factor(grid, params) if v is None else v
    wv = grid.weights * v
    rows, cols, vals = [], [], []
    for n in range(basis.n_max):
        up = basis.up(n)
        start = basis.offsets[n]
        for i in range(up.shape[0]):
            rows.append(np.full(up.shape[1], start + i))
            cols.append(up[i])
            vals.append(np.sqrt(n + 1) * wv)
    return _triplets(basis, rows, cols, vals, "a(v)")


def _lowering_pairs(basis):
    """Yield ``(n, row, col, q, mult)`` for ``M`` in sector n+1 and ``M - q``."""
    for n in range(basis.n_max):
        start = basis.offsets[n + 1]
        for i, M in enumerate(basis.sectors[n + 1]):
            M = tuple(int(x) for x in M)
            qs, mult = np.unique(M, return_counts=True)
            for q, c in zip(qs, mult):
                yield n, start + i, basis.index[remove(M, int(q))], int(q), int(c)


def assemble_creation(basis, mu, params, v=None):
    """``(a*(v) psi)^(n+1)(K) = (n+1)^(-1/2) sum_j v(k_j) psi^(n)(K - k_j)``.

    Built from its own kernel (not as an adjoint) so that it can serve as an
    independent check of :func:`nelson_ibc.fock.adjoint`.
    """
    v = node_form_factor(basis.grid, params) if v is None else v
    rows, cols, vals = [], [], []
    for n, r, c, q, m in _lowering_pairs(basis):
        rows.append(r)
        cols.append(c)
        vals.append(m * v[q] / np.sqrt(n + 1))
    return _triplets(basis, rows, cols, vals, "a*(v)")


def raising_kernel(basis, params, denominator, v=None, kind=""):
    """``-(n+1)^(-1/2) sum_j v(k_j) psi(K - k_j) / denominator(K)``.

    With ``denominator = L_P + lam`` this is ``G``; adding ``tau_+`` gives
    ``F``.
    """
    v = node_form_factor(basis.grid, params) if v is None else v
    rows, cols, vals = [], [], []
    for n, r, c, q, m in _lowering_pairs(basis):
        rows.append(r)
        cols.append(c)
        vals.append(-m * v[q] / (np.sqrt(n + 1) * denominator[r]))
    return _triplets(basis, rows, cols, vals, kind)


def assemble_G(basis, mu, params, lam, v=None):
    """``G_lam``: sector n -> n+1, equal to ``adjoint(-a(v)(L_P + lam)^-1)``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    L = L_P_diagonal(basis, params)
    return raising_kernel(basis, params, L + lam, v=v, kind="G")


def off_diagonal_kernel(basis, params, denominator, v=None, kind="T_od"):
    """Sector-preserving integral operator

    ``-(sum_j sum_q w_q v(q) v(k_j) psi(K - k_j + q)) / denominator(K + q)``

    for ``1 <= n < n_max``; zero on the vacuum and on the top sector.
    ``denominator`` is indexed by the global position of ``K + q``.
    """
    grid = basis.grid
    v = node_form_factor(grid, params) if v is None else v
    wv = grid.weights * v
    N = len(grid)
    rows, cols, vals = [], [], []
    for n in range(1, basis.n_max):
        up = basis.up(n)
        down_up = basis.up(n - 1)
        start = basis.offsets[n]
        off_lower = basis.offsets[n - 1]
        for i, M in enumerate(basis.sectors[n]):
            M = tuple(int(x) for x in M)
            den = denominator[up[i]]
            qs, mult = np.unique(M, return_counts=True)
            for kj, m in zip(qs, mult):
                low = basis.index[remove(M, int(kj))] - off_lower
                rows.append(np.full(N, start + i))
                cols.append(down_up[low])
                vals.append(-m * v[kj] * wv / den)
    return _triplets(basis, rows, cols, vals, kind)


def assemble_T_od(basis, mu, params, lam, v=None):
    if not lam > 0:
        raise ValueError("lambda must be positive")
    L = L_P_diagonal(basis, params)
    return off_diagonal_kernel(basis, params, L + lam, v=v, kind="T_od")


def _h_minus_one(x):
    """``atanh(x)/x - 1`` without cancellation for small ``x``."""
    if x < 1e-3:
        x2 = x * x
        return x2 * (1 / 3 + x2 * (1 / 5 + x2 / 7))
    return math.atanh(x) / x - 1.0


def T_d_integrand(r, p, Omega, params, lam):
    """Radial integrand of ``T_d`` after exact angular integration.

    ``p = |P - sum k_j|`` and ``Omega = sum omega(k_j)``. Uses
    ``<1/((p - xi)^2 + c)>_sphere = atanh(b/a)/b`` with
    ``a = p^2 + r^2 + c``, ``b = 2 p r`` and writes the difference of the two
    resolvent symbols over a common denominator.
    """
    w = math.sqrt(r * r + params.m ** 2)
    free = r * r + w
    a = p * p + r * r + Omega + w + lam
    num = (p * p + Omega + lam) - free * _h_minus_one(2 * p * r / a)
    return 4 * math.pi * params.g ** 2 * r * r / w * num / (free * a)


def T_d_value(p, Omega, params, lam, tail=None):
    """``T_d`` for one configuration over all of R^3 (continuum value)."""
    if params.g == 0:
        return 0.0
    p, Omega = float(p), float(Omega)
    return integrate_radial(lambda r: T_d_integrand(r, p, Omega, params, lam), tail)


def T_d_continuum(basis, params, lam, tail=None):
    """Continuum ``T_d(K)`` for every basis element (no truncation convention)."""
    tail = tail or TailQuadrature()
    p = total_momentum_residual(basis, params)
    Om = field_energy_diagonal(basis, params)
    cache = {}
    out = np.empty(basis.dim)
    for i in range(basis.dim):
        key = (round(p[i], 12), round(Om[i], 12))
        if key not in cache:
            cache[key] = T_d_value(p[i], Om[i], params, lam, tail)
        out[i] = cache[key]
    return out


def counterterm_grid(grid, params, v=None):
    """``sum_q w_q |v(q)|^2 / (q^2 + omega(q))``, i.e. ``-E`` on the grid."""
    v = node_form_factor(grid, params) if v is None else v
    q2 = np.sum(grid.nodes ** 2, axis=1)
    return float(np.sum(grid.weights * v * v / (q2 + omega(grid.nodes, params.m))))


def virtual_emission_grid(basis, params, lam, v=None):
    """``sum_q w_q |v(q)|^2 / (L_P(K + q) + lam)`` for n < n_max, 0 on top."""
    grid = basis.grid
    v = node_form_factor(grid, params) if v is None else v
    wv2 = grid.weights * v * v
    L = L_P_diagonal(basis, params)
    out = np.zeros(basis.dim)
    for n in range(basis.n_max):
        up = basis.up(n)
        out[basis.sector_slice(n)] = (wv2[None, :] / (L[up] + lam)).sum(axis=1)
    return out


def assemble_T_d(basis, params, lam, tail=None, mode="grid", v=None):
    """Diagonal part ``T_d(K)`` as an array over the basis.

    See the module docstring for ``mode``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if mode not in MODES:
        raise ValueError(f"unknown T_d mode {mode!r}")
    grid_part = counterterm_grid(basis.grid, params, v) - virtual_emission_grid(
        basis, params, lam, v)
    if mode == "grid":
        return grid_part
    out = T_d_continuum(basis, params, lam, tail)
    top = basis.sector_slice(basis.n_max)
    out[top] = out[top] + grid_part[top] - grid_part_full_top(basis, params, lam, v)
    return out


def grid_part_full_top(basis, params, lam, v=None):
    """Untruncated grid ``T_d`` on the top sector (virtual state in n_max+1)."""
    grid = basis.grid
    v = node_form_factor(grid, params) if v is None else v
    wv2 = grid.weights * v * v
    nodes = grid.nodes
    wq = omega(nodes, params.m)
    top = basis.sectors[basis.n_max]
    ksum = nodes[top].sum(axis=1) if basis.n_max else np.zeros((1, 3))
    Om = wq[top].sum(axis=1) if basis.n_max else np.zeros(1)
    p = params.P_vec[None, None, :] - ksum[:, None, :] - nodes[None, :, :]
    Lq = np.sum(p * p, axis=2) + Om[:, None] + wq[None, :]
    return counterterm_grid(grid, params, v) - (wv2[None, :] / (Lq + lam)).sum(axis=1)


def tail_correction(basis, params, lam, tail=None, v=None):
    """Continuum minus grid value of the full ``T_d`` integral, per element."""
    cont = T_d_continuum(basis, params, lam, tail)
    full = counterterm_grid(basis.grid, params, v) - virtual_emission_grid(
        basis, params, lam, v)
    top = basis.sector_slice(basis.n_max)
    full[top] = grid_part_full_top(basis, params, lam, v)
    return cont - full


def _triplets(basis, rows, cols, vals, kind):
    if rows and np.ndim(rows[0]):
        rows, cols, vals = (np.concatenate(x) for x in (rows, cols, vals))
    return SectorBlockMatrix.from_triplets(basis, np.asarray(rows, dtype=np.int64),
                                           np.asarray(cols, dtype=np.int64),
                                           np.asarray(vals, dtype=float), kind)


@dataclass(eq=False)
class CoreOperators:
    basis: object
    params: object
    lam: float
    mode: str
    v: np.ndarray = field(repr=False)
    L_P: np.ndarray = field(repr=False)
    dGamma_omega: np.ndarray = field(repr=False)
    a_v: SectorBlockMatrix = field(repr=False)
    a_star_v: SectorBlockMatrix = field(repr=False)
    G: SectorBlockMatrix = field(repr=False)
    G_star: SectorBlockMatrix = field(repr=False)
    T_d: np.ndarray = field(repr=False)
    T_od: SectorBlockMatrix = field(repr=False)

    @property
    def T(self):
        return SectorBlockMatrix.diagonal(self.basis, self.T_d) + self.T_od


def build_core(basis, params, lam, tail=None, mode="grid", cutoff=None):
    """Assemble every operator of :class:`CoreOperators` at ``lam``."""
    mu = basis.mu
    v = node_form_factor(basis.grid, params, cutoff)
    L = L_P_diagonal(basis, params)
    G = assemble_G(basis, mu, params, lam, v=v)
    return CoreOperators(
        basis=basis, params=params, lam=float(lam), mode=mode, v=v, L_P=L,
        dGamma_omega=field_energy_diagonal(basis, params),
        a_v=assemble_annihilation(basis, mu, params, v=v),
        a_star_v=assemble_creation(basis, mu, params, v=v),
        G=G, G_star=G.adjoint(mu),
        T_d=assemble_T_d(basis, params, lam, tail, mode, v=v),
        T_od=assemble_T_od(basis, mu, params, lam, v=v),
    )
