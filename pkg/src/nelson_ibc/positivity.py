"""Cones, entrywise positivity certificates and Perron-Frobenius checks.

In the value representation with strictly positive measure weights a matrix
maps the cone of non-negative vectors into itself iff all of its entries
are non-negative, and ``<phi, A psi> > 0`` for all non-zero cone pairs iff all
entries are strictly positive. The second cone is obtained from the first by
the parity flip ``(-1)^n`` on sector ``n``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateNumerics
from .fock import FockVector, SectorBlockMatrix
from .norms import weighted_eigh

CONES = ("C_plus", "C_minus")

# smallest entry accepted as "strictly positive"
STRICT_FLOOR = 1e-300


@dataclass(frozen=True)
class Cone:
    kind: str = "C_plus"
    tolerance: float = 0.0

    def __post_init__(self):
        if self.kind not in CONES:
            raise ValueError(f"unknown cone {self.kind!r}")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


def parity(basis):
    """``(-1)^n`` per basis element."""
    return np.where(basis.sector_of % 2 == 0, 1.0, -1.0)


def flip_vector(psi, basis):
    data = np.asarray(psi.data if isinstance(psi, FockVector) else psi, dtype=float)
    return data * parity(basis)


def flip_matrix(A, basis):
    """``U A U`` with ``U = diag((-1)^n)``; ``U`` is its own inverse."""
    s = parity(basis)
    if isinstance(A, SectorBlockMatrix):
        return SectorBlockMatrix(basis, sp.diags(s) @ A.matrix @ sp.diags(s), A.kind)
    return np.asarray(A) * s[:, None] * s[None, :]


def is_in_cone(psi, cone, basis=None):
    """Cone membership up to ``cone.tolerance``."""
    if isinstance(psi, FockVector):
        basis = psi.basis
    data = np.asarray(psi.data if isinstance(psi, FockVector) else psi, dtype=float)
    if cone.kind == "C_minus":
        if basis is None:
            raise ValueError("basis is required for the C_minus cone")
        data = flip_vector(data, basis)
    return bool(np.all(data >= -cone.tolerance))


@dataclass
class PositivityReport:
    holds: bool
    property: str
    cone: str
    min_entry: float
    witness: tuple = None
    witness_elements: tuple = field(default=None, repr=False)

    def as_dict(self):
        return {"holds": self.holds, "property": self.property, "cone": self.cone,
                "min_entry": self.min_entry,
                "witness": None if self.witness is None else list(self.witness)}


def _cone_matrix(A, cone, basis):
    if isinstance(A, SectorBlockMatrix):
        basis = A.basis
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    if cone.kind == "C_minus":
        if basis is None:
            raise ValueError("basis is required for the C_minus cone")
        A = flip_matrix(A, basis)
    return A, basis


def _min_location(A, basis):
    idx = np.unravel_index(int(np.argmin(A)), A.shape)
    elems = None
    if basis is not None:
        elems = (basis.element(int(idx[0])), basis.element(int(idx[1])))
    return float(A[idx]), (int(idx[0]), int(idx[1])), elems


def certify_preserves(A, cone=Cone(), basis=None):
    """All entries ``>= -tolerance`` (after the cone flip)."""
    M, basis = _cone_matrix(A, cone, basis)
    m, where, elems = _min_location(M, basis)
    holds = m >= -cone.tolerance
    return PositivityReport(bool(holds), "preserves", cone.kind, m,
                            None if holds else where, None if holds else elems)


def certify_improves(A, cone=Cone(), basis=None):
    """All entries strictly positive; reports the smallest one and where it sits."""
    M, basis = _cone_matrix(A, cone, basis)
    m, where, elems = _min_location(M, basis)
    floor = max(cone.tolerance, STRICT_FLOOR)
    return PositivityReport(bool(m > floor), "improves", cone.kind, m, where, elems)


@dataclass
class PerronFrobeniusReport:
    ground_energy: float
    first_excited: float
    gap: float
    simple: bool
    eigenvector_positive: bool
    sign: float
    min_component: float
    cone: str
    eigenvector: np.ndarray = field(repr=False)

    def as_dict(self):
        return {k: getattr(self, k) for k in (
            "ground_energy", "first_excited", "gap", "simple",
            "eigenvector_positive", "sign", "min_component", "cone")}


def perron_frobenius_check(H, mu, cone=Cone(), basis=None, gap_floor=1e-10):
    """Lowest two eigenvalues and the sign structure of the ground vector.

    The eigenvector is normalised so its largest-magnitude component is
    positive before the cone test. Raises :class:`DegenerateNumerics` when
    the gap is below ``gap_floor``.
    """
    evals, vecs = weighted_eigh(H, mu)
    gap = float(evals[1] - evals[0]) if len(evals) > 1 else np.inf
    if gap < gap_floor:
        raise DegenerateNumerics(f"ground-state gap {gap:.3g} below {gap_floor:g}")
    psi = vecs[:, 0]
    if cone.kind == "C_minus":
        psi = flip_vector(psi, basis)
    sign = 1.0 if psi[np.argmax(np.abs(psi))] > 0 else -1.0
    psi = sign * psi
    return PerronFrobeniusReport(
        ground_energy=float(evals[0]),
        first_excited=float(evals[1]) if len(evals) > 1 else float("inf"),
        gap=gap, simple=True,
        eigenvector_positive=bool(np.all(psi > STRICT_FLOOR)),
        sign=sign, min_component=float(psi.min()), cone=cone.kind,
        eigenvector=sign * vecs[:, 0],
    )
