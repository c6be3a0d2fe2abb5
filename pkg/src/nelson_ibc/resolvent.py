"""Hamiltonian in both representations and its positivity-preserving resolvent.

``H_G = (1 - G)*(L_P + lam)(1 - G) + T - lam``
``H_F = (1 - F)*(L_P + tau_+ + lam)(1 - F) + S - lam``

Both are returned as dense matrices in the value representation. In the
truncated space ``G`` and ``F`` strictly raise the particle number, so
``(1 - G)^-1`` is the finite sum ``sum_{j <= n_max} G^j``.

The resolvent is computed as

    (H + lam - mu)^-1 = R0 sum_j (-(S - mu) R0)^j,
    R0 = (1 - F)^-1 (L_P + tau_+ + lam)^-1 (1 - F*)^-1,

and pushed down to smaller spectral parameters by
:func:`extend_resolvent`. Dense ``numpy.linalg.solve`` is the oracle.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import SeriesDivergent, SingularSolve
from .fock import SectorBlockMatrix, adjoint
from .norms import op_norm
from .ops_core import build_core
from .ops_modified import build_modified

logger = logging.getLogger(__name__)


def dense(A):
    if isinstance(A, SectorBlockMatrix):
        return A.toarray()
    return np.asarray(A, dtype=float)


def _sandwich(X, D, mu):
    """``X* diag(D) X`` for the weighted adjoint."""
    return adjoint(X, mu) @ (D[:, None] * X)


def build_H_G(core):
    """Hamiltonian from ``G``, ``L_P`` and ``T`` at ``core.lam``."""
    basis, lam = core.basis, core.lam
    X = np.eye(basis.dim) - dense(core.G)
    D = core.L_P + lam
    H = _sandwich(X, D, basis.mu)
    H += np.diag(core.T_d)
    H += dense(core.T_od)
    H -= lam * np.eye(basis.dim)
    return H


def build_H_F(core, modified):
    """Hamiltonian from ``F``, ``L_P + tau_+`` and ``S``."""
    basis, lam = core.basis, core.lam
    X = np.eye(basis.dim) - dense(modified.F)
    D = core.L_P + modified.tau_plus + lam
    H = _sandwich(X, D, basis.mu)
    H += np.diag(modified.S_d)
    H += dense(modified.S_od)
    H -= lam * np.eye(basis.dim)
    return H


@dataclass
class InverseReport:
    inverse: np.ndarray = field(repr=False)
    norm: float
    contraction: bool
    space: str


def invert_one_minus(A, mu, n_max, space="plain", omega_diag=None):
    """``(1 - A)^-1`` for a strictly sector-raising (or lowering) ``A``.

    The inverse is the finite sum ``sum_{j=0}^{n_max} A^j``. The report also
    carries ``||A||`` on the plain space or, with ``space="omega-weighted"``,
    on the graph-norm space of ``(1 + dGamma(omega))^(1/2)``.
    """
    A = dense(A)
    dim = A.shape[0]
    inv = np.eye(dim)
    term = np.eye(dim)
    for _ in range(n_max):
        term = A @ term
        inv += term
    weight = None
    if space == "omega-weighted":
        weight = np.sqrt(1.0 + omega_diag)
    elif space != "plain":
        raise ValueError(f"unknown space {space!r}")
    nrm = op_norm(A, mu, weight)
    return InverseReport(inv, nrm, nrm < 1.0, space)


def build_R0(modified):
    """``(1 - F)^-1 (L_P + tau_+ + lam)^-1 (1 - F*)^-1`` as a dense matrix."""
    core = modified.core
    basis = core.basis
    inv = invert_one_minus(modified.F, basis.mu, basis.n_max).inverse
    D = core.L_P + modified.tau_plus + core.lam
    return inv @ (adjoint(inv, basis.mu) / D[:, None])


@dataclass(eq=False)
class HamiltonianBuild:
    core: object
    modified: object
    H_G: np.ndarray = field(repr=False)
    H_F: np.ndarray = field(repr=False)
    inv_one_minus_G: InverseReport = field(repr=False)
    inv_one_minus_F: InverseReport = field(repr=False)
    R0: np.ndarray = field(repr=False)

    @property
    def lam(self):
        return self.core.lam

    @property
    def basis(self):
        return self.core.basis

    def representation_gap(self):
        """``||H_G - H_F|| / ||H_G||`` (weighted operator norm)."""
        mu = self.basis.mu
        return op_norm(self.H_G - self.H_F, mu) / op_norm(self.H_G, mu)


def build_hamiltonian(basis, params, lam, tail=None, mode="grid", core=None):
    core = core or build_core(basis, params, lam, tail, mode)
    mod = build_modified(core)
    mu = basis.mu
    return HamiltonianBuild(
        core=core, modified=mod,
        H_G=build_H_G(core), H_F=build_H_F(core, mod),
        inv_one_minus_G=invert_one_minus(core.G, mu, basis.n_max),
        inv_one_minus_F=invert_one_minus(mod.F, mu, basis.n_max),
        R0=build_R0(mod),
    )


def perturbation_norm(build, mu_shift):
    """``||(S - mu) R0||`` in the weighted operator norm."""
    K = (dense(build.modified.S) - mu_shift * np.eye(build.basis.dim)) @ build.R0
    return op_norm(K, build.basis.mu)


@dataclass
class NeumannResult:
    resolvent: np.ndarray = field(repr=False)
    lam: float
    mu: float
    norm: float
    terms: int
    residual: float
    min_partial_entry: float
    generator_min_entry: float


def resolvent_neumann(build, mu=None, j_max=5000, tol=1e-12, sign=None):
    """``(H + lam - mu)^-1`` by the Neumann series around ``R0``.

    ``mu`` defaults to ``mu0 + 1``. Raises :class:`SeriesDivergent` if
    ``||(S - mu) R0|| >= 1``. The smallest entry over all partial sums
    ``sum_{i <= j} (-(S - mu) R0)^i`` is recorded in the result; with a
    ``sign`` vector (the sector parity) it is taken after conjugation by
    ``diag(sign)``, i.e. with respect to the parity-flipped cone.
    """
    mod = build.modified
    basis = build.basis
    mu_w = basis.mu
    if mu is None:
        mu = mod.mu0 + 1.0
    dim = basis.dim
    A = -(dense(mod.S) - mu * np.eye(dim)) @ build.R0
    q = op_norm(A, mu_w)
    if q >= 1.0:
        raise SeriesDivergent(
            f"||(S - mu) R0|| = {q:.4g} >= 1 at lam={build.lam}; raise lam", norm=q)

    total = np.eye(dim)
    term = np.eye(dim)
    flip = 1.0 if sign is None else np.outer(sign, sign)
    min_partial = 1.0
    bound = tol * (1.0 - q)
    j = 0
    for j in range(1, j_max + 1):
        term = A @ term
        total += term
        min_partial = min(min_partial, float((flip * total).min()))
        if op_norm(term, mu_w) <= bound:
            break
    X = build.R0 @ total
    H = build.H_F + (build.lam - mu) * np.eye(dim)
    residual = op_norm(H @ X - np.eye(dim), mu_w)
    logger.debug("Neumann series: %d terms, q=%.3g, residual=%.2e", j, q, residual)
    return NeumannResult(X, build.lam, float(mu), q, j, residual, min_partial,
                         float((flip * A).min()))


def neumann_doubling(A, mu, tol=1e-14, max_doublings=64):
    """``sum_j A^j`` via ``S_2k = S_k + A^k S_k`` (all partial sums at 2^k)."""
    q = op_norm(A, mu)
    if q >= 1.0:
        raise SeriesDivergent(f"generator norm {q:.6g} >= 1", norm=q)
    S = np.eye(A.shape[0])
    P = np.array(A, dtype=float)
    for _ in range(max_doublings):
        S = S + P @ S
        P = P @ P
        if op_norm(P, mu) <= tol * (1.0 - q):
            return S, q
    raise SeriesDivergent(f"doubling did not converge (norm {q:.6g})", norm=q)


def extend_resolvent(R_gamma, gamma, lam, mu, tol=1e-14):
    """``(H + lam)^-1 = R_gamma sum_j ((gamma - lam) R_gamma)^j``.

    ``R_gamma = (H + gamma)^-1``; requires ``(gamma - lam)||R_gamma|| < 1``,
    i.e. ``lam`` above minus the bottom of the spectrum of ``H`` for ``lam <= gamma``.
    """
    if lam == gamma:
        return np.array(R_gamma, dtype=float)
    S, _ = neumann_doubling((gamma - lam) * np.asarray(R_gamma), mu, tol)
    return np.asarray(R_gamma) @ S


def dense_resolvent(H, shift, cond_limit=1e12):
    """``(H + shift)^-1`` by LU; raises :class:`SingularSolve` near the spectrum."""
    M = np.asarray(H) + shift * np.eye(H.shape[0])
    if np.linalg.cond(M) > cond_limit:
        raise SingularSolve(f"H + {shift} is numerically singular")
    return np.linalg.solve(M, np.eye(H.shape[0]))


def relative_difference(X, Y, mu):
    return op_norm(X - Y, mu) / op_norm(Y, mu)


def a_action(core, psi):
    """``A psi = a(v)(1 - G)psi + T psi`` (the extension of ``a(v)``)."""
    psi = np.asarray(psi, dtype=float)
    a = core.a_v.matrix
    return a @ (psi - core.G.matrix @ psi) + core.T_d * psi + core.T_od.matrix @ psi


def verify_distributional_identity(build, psi):
    """Compare ``H psi`` with ``L_P psi + a*(v) psi + A psi``."""
    core = build.core
    psi = np.asarray(psi, dtype=float)
    lhs = build.H_G @ psi
    A_psi = a_action(core, psi)
    rhs = core.L_P * psi + core.a_star_v.matrix @ psi + A_psi
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    return {
        "max_abs": float(np.abs(lhs - rhs).max()),
        "relative": float(np.abs(lhs - rhs).max() / scale),
        "A_psi": A_psi,
    }


def empirical_lambda0(basis, params, lambdas, tail=None, mode="grid", which="G"):
    """``||G_lam||`` (or ``||F_lam||``) over ``lambdas`` and the smallest
    tested ``lam`` with norm below one (``None`` if there is none)."""
    norms = []
    for lam in lambdas:
        core = build_core(basis, params, lam, tail, mode)
        op = core.G if which == "G" else build_modified(core).F
        norms.append(op_norm(op, basis.mu))
    below = [lam for lam, n in zip(lambdas, norms) if n < 1.0]
    return {"lambdas": list(lambdas), "norms": norms,
            "lambda0": min(below) if below else None}


def auto_lambda(basis, params, tail=None, mode="grid", start=1.0, target=0.9,
                max_doublings=30):
    """Double ``lam`` from ``start`` until ``||(S - mu) R0|| <= target``
    with ``mu = mu0 + 1``. Returns ``(build, mu, norm)``."""
    lam = float(start)
    for _ in range(max_doublings):
        build = build_hamiltonian(basis, params, lam, tail, mode)
        mu = build.modified.mu0 + 1.0
        q = perturbation_norm(build, mu)
        logger.debug("auto lambda: lam=%g mu=%g norm=%g", lam, mu, q)
        if q <= target:
            return build, mu, q
        lam *= 2.0
    raise SeriesDivergent(f"no lambda up to {lam} gives ||(S-mu)R0|| <= {target}")
