"""Operator norms on the weighted Fock space.

The value representation is not orthonormal: with ``W = diag(mu)`` the
Hilbert-space norm of an operator ``A`` equals the spectral norm of
``W^(1/2) A W^(-1/2)``. Dense SVD is used up to ``DENSE_LIMIT``; above that a
power iteration on ``B^T B`` takes over.
"""

import logging

import numpy as np
import scipy.sparse as sp

from .fock import SectorBlockMatrix

logger = logging.getLogger(__name__)

DENSE_LIMIT = 2000


def _raw(A):
    if isinstance(A, SectorBlockMatrix):
        return A.matrix
    return A


def similarity(A, scale):
    """``diag(scale) A diag(1/scale)`` for dense or sparse ``A``."""
    A = _raw(A)
    if sp.issparse(A):
        return sp.diags(scale) @ A @ sp.diags(1.0 / scale)
    return (np.asarray(A) * scale[:, None]) / scale[None, :]


def power_iteration(B, max_iter=1000, tol=1e-10, seed=0):
    """Largest singular value of ``B`` by power iteration on ``B^T B``."""
    rng = np.random.default_rng(seed)
    x = rng.random(B.shape[1]) + 0.5
    x /= np.linalg.norm(x)
    sigma_old = np.inf
    sigma = 0.0
    for it in range(max_iter):
        y = B @ x
        sigma = np.linalg.norm(y)
        if sigma == 0.0:
            return 0.0
        if abs(sigma - sigma_old) <= tol * sigma:
            logger.debug("power iteration converged after %d steps", it + 1)
            break
        sigma_old = sigma
        x = B.T @ y
        x /= np.linalg.norm(x)
    return float(sigma)


def op_norm(A, mu, weight=None, method="auto"):
    """Operator norm of ``A`` on the Fock space with measure ``mu``.

    ``weight`` (a positive diagonal, e.g. ``(1 + Omega)^(1/2)``) turns this
    into the norm on the corresponding graph-norm space:
    ``||weight A weight^-1||``.
    """
    scale = np.sqrt(np.asarray(mu, dtype=float))
    if weight is not None:
        scale = scale * np.asarray(weight, dtype=float)
    B = similarity(A, scale)
    n = B.shape[0]
    if method == "dense" or (method == "auto" and n <= DENSE_LIMIT):
        B = B.toarray() if sp.issparse(B) else B
        if not np.any(B):
            return 0.0
        return float(np.linalg.norm(B, 2))
    return power_iteration(B)


def vec_norm(x, mu):
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.sum(mu * x * x)))


def symmetric_form(H, mu):
    """``W^(1/2) H W^(-1/2)``, symmetric when ``H`` is self-adjoint on (mu)."""
    s = np.sqrt(np.asarray(mu, dtype=float))
    H = H.toarray() if sp.issparse(H) else np.asarray(H)
    return (H * s[:, None]) / s[None, :]


def weighted_eigh(H, mu):
    """Eigenvalues and value-representation eigenvectors of a self-adjoint ``H``.

    Eigenvectors are normalised in the weighted norm.
    """
    B = symmetric_form(H, mu)
    evals, U = np.linalg.eigh(0.5 * (B + B.T))
    return evals, U / np.sqrt(np.asarray(mu, dtype=float))[:, None]


def self_adjointness_defect(H, mu):
    """``||H - H*|| / ||H||`` in the weighted operator norm."""
    B = symmetric_form(H, mu)
    nH = np.linalg.norm(B, 2)
    return float(np.linalg.norm(B - B.T, 2) / nH) if nH else 0.0
