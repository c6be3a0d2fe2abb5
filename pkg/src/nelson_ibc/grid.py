"""Momentum quadrature standing in for L^2(R^3).

Two pieces live here:

* :class:`MomentumGrid`, a product of a radial rule on
  ``[r_min, r_max]`` and an angular rule on the unit sphere. Its nodes carry
  the one-boson momenta of the Fock basis and its weights are the measure
  ``d^3k``.
* :class:`TailQuadrature` together with :func:`integrate_radial`, an adaptive
  one-dimensional rule on ``(0, inf)`` used for scalar integrals whose
  integrand has already been reduced over angles.
"""

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.integrate import lebedev_rule

from .errors import InvalidConfig, NoConvergence

SCHEMES = ("product-gauss", "uniform-shell")


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    r_min: float
    r_max: float
    n_radial: int
    n_angular: int
    scheme: str

    def __len__(self):
        return len(self.weights)

    @property
    def radii(self):
        return np.linalg.norm(self.nodes, axis=1)

    @property
    def volume(self):
        return float(self.weights.sum())

    def radial_degree(self):
        """Largest ``p`` such that ``|k|^p`` is integrated exactly."""
        if self.scheme == "product-gauss":
            return 2 * self.n_radial - 3
        return 0

    def summary(self):
        return {
            "scheme": self.scheme,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "n_radial": self.n_radial,
            "n_angular": self.n_angular,
            "n_nodes": len(self),
            "total_weight": self.volume,
        }


@dataclass(frozen=True)
class TailQuadrature:
    """Settings for :func:`integrate_radial`.

    ``r_tail_max`` splits the half-line into a finite panel handled by
    adaptive Gauss-Kronrod with at most ``n_tail`` subintervals and an
    infinite panel handled by the same rule after the usual ``1/t`` map.
    """

    r_tail_max: float = 200.0
    n_tail: int = 400
    tolerance: float = 1e-9

    def __post_init__(self):
        if not self.r_tail_max > 0:
            raise InvalidConfig("r_tail_max must be positive")
        if self.n_tail < 1:
            raise InvalidConfig("n_tail must be >= 1")
        if not self.tolerance > 0:
            raise InvalidConfig("tail tolerance must be positive")

    def check_against(self, grid):
        if not self.r_tail_max > grid.r_max:
            raise InvalidConfig(
                f"r_tail_max={self.r_tail_max} must exceed grid r_max={grid.r_max}"
            )


def _icosahedron():
    phi = (1 + 5 ** 0.5) / 2
    pts = []
    for s1 in (-1, 1):
        for s2 in (-1, 1):
            pts += [(0, s1, s2 * phi), (s1, s2 * phi, 0), (s2 * phi, 0, s1)]
    pts = np.array(pts, dtype=float)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _fibonacci(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    theta = np.pi * (1 + 5 ** 0.5) * i
    rho = np.sqrt(1 - z * z)
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])


@lru_cache(maxsize=None)
def _lebedev_sizes():
    sizes = {}
    for order in range(3, 32, 2):
        x, _ = lebedev_rule(order)
        sizes[x.shape[1]] = order
    return sizes


def angular_rule(n):
    """Directions and weights (summing to ``4*pi``) of an ``n``-point rule.

    Lebedev rules are used when ``n`` matches one of their sizes
    (6, 14, 26, ...), the icosahedron for ``n = 12`` and a Fibonacci lattice
    with equal weights otherwise. ``n = 1`` is a single direction carrying the
    full solid angle.
    """
    if n < 1:
        raise InvalidConfig("n_angular must be >= 1")
    sizes = _lebedev_sizes()
    if n in sizes:
        x, w = lebedev_rule(sizes[n])
        dirs = x.T.copy()
        # zero out -0.0 and 1e-17 noise so node comparisons stay exact
        dirs[np.abs(dirs) < 1e-15] = 0.0
        return dirs, np.asarray(w, dtype=float)
    if n == 12:
        dirs = _icosahedron()
    elif n == 1:
        dirs = np.array([[0.0, 0.0, 1.0]])
    else:
        dirs = _fibonacci(n)
    return dirs, np.full(n, 4 * np.pi / n)


def _radial_rule(r_min, r_max, n, scheme):
    if scheme == "product-gauss":
        x, w = leggauss(n)
        r = 0.5 * (x + 1) * (r_max - r_min) + r_min
        return r, 0.5 * (r_max - r_min) * w * r * r
    if r_max == r_min:
        # degenerate single shell: weights carry the surface measure
        return np.array([r_min]), np.array([r_min * r_min])
    edges = np.linspace(r_min, r_max, n + 1)
    r = 0.5 * (edges[1:] + edges[:-1])
    return r, (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0


def build_grid(r_min=0.5, r_max=4.0, n_radial=3, n_angular=6,
               scheme="product-gauss"):
    """Build a shell grid ``{r_min <= |k| <= r_max}``.

    Parameters
    ----------
    r_min, r_max : float
        Radial support. ``r_min > 0`` keeps the origin (where ``v`` blows up
        for ``m = 0``) off the grid. ``r_min == r_max`` is accepted only for
        a single ``uniform-shell`` sphere.
    n_radial, n_angular : int
        Number of radial shells and of directions per shell.
    scheme : {"product-gauss", "uniform-shell"}
        Gauss-Legendre radial nodes with ``r^2 dr`` weights, or equal-width
        bins with exact bin volumes and nodes at the bin midpoints.

    Returns
    -------
    MomentumGrid
    """
    if scheme not in SCHEMES:
        raise InvalidConfig(f"unknown grid scheme {scheme!r}")
    if not (np.isfinite(r_min) and r_min > 0):
        raise InvalidConfig(f"r_min must be > 0, got {r_min}")
    if int(n_radial) != n_radial or n_radial < 1:
        raise InvalidConfig(f"n_radial must be a positive integer, got {n_radial}")
    if int(n_angular) != n_angular or n_angular < 1:
        raise InvalidConfig(f"n_angular must be a positive integer, got {n_angular}")
    n_radial, n_angular = int(n_radial), int(n_angular)
    degenerate = scheme == "uniform-shell" and n_radial == 1 and r_max == r_min
    if not (np.isfinite(r_max) and (r_max > r_min or degenerate)):
        raise InvalidConfig(f"r_max must exceed r_min, got {r_min}, {r_max}")

    r, wr = _radial_rule(float(r_min), float(r_max), n_radial, scheme)
    dirs, wa = angular_rule(n_angular)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
    weights = (wr[:, None] * wa[None, :]).ravel()

    if np.unique(np.round(nodes, 12), axis=0).shape[0] != nodes.shape[0]:
        raise InvalidConfig("grid contains duplicate nodes")
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return MomentumGrid(nodes, weights, float(r_min), float(r_max),
                        n_radial, n_angular, scheme)


def refine(grid):
    """One refinement step: ``n_radial`` doubled and ``n_angular`` at least
    doubled, rounded up to the next Lebedev size when one exists."""
    target = 2 * grid.n_angular
    larger = sorted(n for n in _lebedev_sizes() if n >= target)
    n_angular = larger[0] if larger else target
    return build_grid(grid.r_min, grid.r_max, 2 * grid.n_radial, n_angular,
                      grid.scheme)


def integrate_radial(f, tail=None):
    """Adaptive integral of ``f`` over ``(0, inf)``.

    ``f`` is a scalar function of ``r`` that already includes the spherical
    factor. Raises :class:`NoConvergence` if either panel reports a failure
    other than round-off, or if the combined error estimate exceeds
    ``tail.tolerance``.
    """
    tail = tail or TailQuadrature()
    R = tail.r_tail_max
    tol = tail.tolerance
    total, err = 0.0, 0.0
    for a, b in ((0.0, R), (R, np.inf)):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, e = integrate.quad(f, a, b, epsabs=tol / 4, epsrel=1e-12,
                                    limit=tail.n_tail)
        # round-off warnings are tolerated when the error estimate is small
        fatal = [w for w in caught if "roundoff" not in str(w.message)]
        if fatal or not np.isfinite(val) or not np.isfinite(e):
            raise NoConvergence(
                f"radial quadrature failed on [{a}, {b}] (value={val}, error={e})")
        total += val
        err += e
    if err > tol:
        raise NoConvergence(f"radial error estimate {err:.3e} exceeds {tol:.3e}")
    return total
