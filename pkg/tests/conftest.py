import itertools

import numpy as np
import pytest

from nelson_ibc.fock import enumerate_basis
from nelson_ibc.grid import build_grid
from nelson_ibc.model import ModelParams


@pytest.fixture(scope="session")
def params():
    return ModelParams(m=0.0, g=-1.0, P=(0.0, 0.0, 0.0))


@pytest.fixture(scope="session")
def ref_grid():
    return build_grid(0.5, 4.0, 3, 6, "product-gauss")


@pytest.fixture(scope="session")
def ref_basis(ref_grid):
    return enumerate_basis(ref_grid, 2)


@pytest.fixture(scope="session")
def tiny_grid():
    # three nodes on one ray, one per radial shell
    return build_grid(0.6, 2.5, 3, 1, "product-gauss")


@pytest.fixture(scope="session")
def tiny_basis(tiny_grid):
    return enumerate_basis(tiny_grid, 2)


@pytest.fixture(scope="session")
def moving_params():
    return ModelParams(m=0.7, g=-1.3, P=(0.3, -0.2, 0.5))


# -- brute-force tensor oracle ------------------------------------------------
# A symmetric n-boson function is stored as a full array of shape (N,)*n; the
# operators are applied with their defining formulas over ordered tuples.

def to_tensors(basis, x):
    N = len(basis.grid)
    out = []
    for n in range(basis.n_max + 1):
        T = np.zeros((N,) * n)
        for idx in itertools.product(range(N), repeat=n):
            T[idx] = x[basis.lookup(idx)]
        out.append(T)
    return out


def from_tensors(basis, tensors):
    x = np.zeros(basis.dim)
    for n, T in enumerate(tensors):
        for i, M in enumerate(basis.sectors[n]):
            x[basis.offsets[n] + i] = T[tuple(M)]
    return x


def L_of(grid, params, idx):
    k = grid.nodes[list(idx)].reshape(-1, 3)
    w = np.sqrt(np.sum(k * k, axis=1) + params.m ** 2)
    p = np.asarray(params.P, dtype=float) - k.sum(axis=0)
    return float(p @ p + w.sum())
