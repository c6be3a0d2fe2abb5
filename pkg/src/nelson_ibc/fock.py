"""Truncated symmetric Fock space over a momentum grid.

Vectors are stored in the *value representation*: a symmetric n-boson
function is recorded by its value on each sorted multiset of grid nodes.
The scalar product then carries the measure weight

    mu(M) = n! / prod_c m_c!  *  prod_{q in M} w_q,

which counts the orderings of the multiset ``M`` (multiplicities ``m_c``).
Operators are matrices in this representation, so "maps the positive cone
into itself" is the same as "all entries are non-negative".
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

from .errors import ResourceLimit, ShapeMismatch

DEFAULT_MAX_DIM = 50_000


def sector_sizes(n_nodes, n_max):
    return [comb(n_nodes + n - 1, n) for n in range(n_max + 1)]


def _multiplicity_factor(M):
    counts = np.unique(M, return_counts=True)[1] if len(M) else ()
    out = factorial(len(M))
    for c in counts:
        out //= factorial(int(c))
    return out


@dataclass(eq=False)
class FockBasis:
    grid: object
    n_max: int
    sectors: list = field(repr=False)
    offsets: np.ndarray = field(repr=False)
    index: dict = field(repr=False)
    mu: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return int(self.offsets[-1])

    @property
    def sizes(self):
        return [len(s) for s in self.sectors]

    def sector_slice(self, n):
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    @property
    def sector_of(self):
        return np.repeat(np.arange(self.n_max + 1), self.sizes)

    def element(self, i):
        n = int(np.searchsorted(self.offsets, i, side="right") - 1)
        return tuple(int(q) for q in self.sectors[n][i - self.offsets[n]])

    def lookup(self, M):
        """Global position of the multiset ``M`` (any order), or -1."""
        return self.index.get(tuple(sorted(M)), -1)

    def momenta(self, M):
        return self.grid.nodes[list(M)].reshape(-1, 3)

    def up(self, n):
        """Table ``t[i, q]`` = global index of ``M_i + {q}`` for ``M_i`` in sector n.

        Only defined for ``n < n_max``; cached.
        """
        if not 0 <= n < self.n_max:
            raise ValueError(f"no sector above {n} in a basis with n_max={self.n_max}")
        cache = self.__dict__.setdefault("_up", {})
        if n not in cache:
            N = len(self.grid)
            t = np.empty((len(self.sectors[n]), N), dtype=np.int64)
            for i, M in enumerate(self.sectors[n]):
                M = tuple(int(x) for x in M)
                for q in range(N):
                    t[i, q] = self.index[insert(M, q)]
            cache[n] = t
        return cache[n]


def insert(M, q):
    return tuple(sorted(M + (q,)))


def remove(M, q):
    i = M.index(q)
    return M[:i] + M[i + 1:]


def enumerate_basis(grid, n_max, max_dim=DEFAULT_MAX_DIM):
    """Enumerate sorted multisets of grid-node indices for n = 0..n_max.

    Sectors are listed in lexicographic order. Raises
    :class:`ResourceLimit` before enumerating when the total dimension
    exceeds ``max_dim``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    N = len(grid)
    sizes = sector_sizes(N, n_max)
    total = sum(sizes)
    if max_dim is not None and total > max_dim:
        raise ResourceLimit(total, max_dim)

    w = np.asarray(grid.weights)
    sectors, index, mu = [], {}, np.empty(total)
    pos = 0
    for n in range(n_max + 1):
        elems = np.array(list(combinations_with_replacement(range(N), n)),
                         dtype=np.int64).reshape(sizes[n], n)
        sectors.append(elems)
        for M in elems:
            key = tuple(int(q) for q in M)
            index[key] = pos
            mu[pos] = _multiplicity_factor(M) * np.prod(w[M])
            pos += 1
    offsets = np.cumsum([0] + sizes)
    mu.setflags(write=False)
    return FockBasis(grid, n_max, sectors, offsets, index, mu)


class FockVector:
    """A Fock vector in the value representation.

    ``data`` is the flat concatenation of the sector arrays; ``sector(n)``
    is a view on one of them.
    """

    def __init__(self, basis, data=None):
        self.basis = basis
        if data is None:
            data = np.zeros(basis.dim)
        data = np.asarray(data, dtype=float)
        if data.shape != (basis.dim,):
            raise ShapeMismatch(f"expected shape ({basis.dim},), got {data.shape}")
        self.data = data

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def sector(self, n):
        return self.data[self.basis.sector_slice(n)]

    @classmethod
    def vacuum(cls, basis):
        v = cls(basis)
        v.data[0] = 1.0
        return v

    @classmethod
    def indicator(cls, basis, M):
        v = cls(basis)
        v.data[basis.lookup(tuple(M))] = 1.0
        return v

    def norm(self):
        return float(np.sqrt(inner_product(self, self, self.basis.mu)))


def _as_array(x, dim=None):
    arr = np.asarray(x.data if isinstance(x, FockVector) else x, dtype=float)
    if dim is not None and arr.shape[0] != dim:
        raise ShapeMismatch(f"vector of length {arr.shape[0]} on basis of dim {dim}")
    return arr


def inner_product(phi, psi, mu):
    """Weighted scalar product ``sum_M mu(M) phi(M) psi(M)``."""
    mu = np.asarray(mu)
    a, b = _as_array(phi), _as_array(psi)
    if a.shape != mu.shape or b.shape != mu.shape:
        raise ShapeMismatch(f"shapes {a.shape}, {b.shape} vs weights {mu.shape}")
    return float(np.sum(mu * a * b))


class SectorBlockMatrix:
    """Sparse operator on a truncated Fock basis.

    Stored as one CSR matrix over the full basis; ``block(n_out, n_in)``
    slices out the sector blocks.
    """

    def __init__(self, basis, matrix, kind=""):
        self.basis = basis
        self.matrix = sp.csr_matrix(matrix)
        if self.matrix.shape != (basis.dim, basis.dim):
            raise ShapeMismatch(f"matrix shape {self.matrix.shape} vs dim {basis.dim}")
        self.kind = kind

    @classmethod
    def diagonal(cls, basis, values, kind="diagonal"):
        return cls(basis, sp.diags(np.asarray(values, dtype=float)), kind)

    @classmethod
    def identity(cls, basis):
        return cls(basis, sp.identity(basis.dim, format="csr"), "identity")

    @classmethod
    def from_triplets(cls, basis, rows, cols, vals, kind=""):
        m = sp.coo_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))
        return cls(basis, m.tocsr(), kind)

    def block(self, n_out, n_in):
        b = self.basis
        return self.matrix[b.sector_slice(n_out), b.sector_slice(n_in)]

    def nonzero_blocks(self):
        out = []
        for i in range(self.basis.n_max + 1):
            for j in range(self.basis.n_max + 1):
                if self.block(i, j).count_nonzero():
                    out.append((i, j))
        return out

    def diag(self):
        return self.matrix.diagonal()

    def toarray(self):
        return self.matrix.toarray()

    def adjoint(self, mu=None):
        return adjoint(self, self.basis.mu if mu is None else mu)

    def _wrap(self, m, kind=""):
        return SectorBlockMatrix(self.basis, m, kind)

    def __matmul__(self, other):
        if isinstance(other, SectorBlockMatrix):
            return self._wrap(self.matrix @ other.matrix)
        if isinstance(other, FockVector):
            return FockVector(self.basis, self.matrix @ other.data)
        return self.matrix @ other

    def __add__(self, other):
        if isinstance(other, SectorBlockMatrix):
            return self._wrap(self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SectorBlockMatrix):
            return self._wrap(self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return self._wrap(-self.matrix, self.kind)

    def __mul__(self, c):
        return self._wrap(self.matrix * float(c), self.kind)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SectorBlockMatrix(kind={self.kind!r}, dim={self.basis.dim}, nnz={self.matrix.nnz})"


def adjoint(A, mu):
    """Adjoint for the weighted scalar product: ``(A*)_MN = mu(N)/mu(M) A_NM``.

    Accepts a :class:`SectorBlockMatrix` or a dense array.
    """
    mu = np.asarray(mu, dtype=float)
    if isinstance(A, SectorBlockMatrix):
        m = sp.diags(1.0 / mu) @ A.matrix.T @ sp.diags(mu)
        return SectorBlockMatrix(A.basis, m, A.kind + "*" if A.kind else "")
    A = np.asarray(A)
    if A.shape != (mu.size, mu.size):
        raise ShapeMismatch(f"matrix shape {A.shape} vs weights {mu.shape}")
    return (A.T * mu[None, :]) / mu[:, None]
