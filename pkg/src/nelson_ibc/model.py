"""Scalar model functions of the fixed-momentum Nelson model.

Dispersion ``omega(k) = sqrt(k^2 + m^2)``, form factor
``v(k) = g * omega(k)^(-1/2)`` and the free fibre symbol
``L_P(K) = (P - sum k_j)^2 + sum omega(k_j)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig, SingularInput


@dataclass(frozen=True)
class ModelParams:
    """Boson mass ``m``, coupling ``g`` and total momentum ``P``.

    ``g = 0`` is accepted so that the free field can serve as a control;
    ``g < 0`` is the sign for which the positive cone is ``C_+``.
    """

    m: float = 0.0
    g: float = -1.0
    P: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        P = tuple(float(p) for p in np.ravel(self.P))
        if len(P) != 3:
            raise InvalidConfig(f"P must be a 3-vector, got {self.P!r}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "g", float(self.g))
        if not np.isfinite(self.m) or self.m < 0:
            raise InvalidConfig(f"boson mass must be >= 0, got {self.m}")
        if not np.isfinite(self.g):
            raise InvalidConfig(f"coupling must be finite, got {self.g}")

    @property
    def P_vec(self):
        return np.asarray(self.P, dtype=float)

    def with_coupling(self, g):
        return ModelParams(m=self.m, g=g, P=self.P)


def omega(k, m):
    """Dispersion relation; ``k`` has shape ``(..., 3)``."""
    k = np.asarray(k, dtype=float)
    return np.sqrt(np.sum(k * k, axis=-1) + m * m)


def form_factor(k, params):
    """Form factor ``g * omega(k)^(-1/2)`` evaluated at momenta ``k``."""
    w = omega(k, params.m)
    if np.any(w == 0):
        raise SingularInput("form factor is singular where omega(k) = 0")
    return params.g / np.sqrt(w)


def field_energy_symbol(K, params):
    """``Omega(K) = sum_j omega(k_j)`` for a multiset ``K`` of shape (n, 3)."""
    K = np.asarray(K, dtype=float).reshape(-1, 3)
    return float(np.sum(omega(K, params.m)))


def L_P_symbol(K, params):
    """``(P - sum_j k_j)^2 + sum_j omega(k_j)``; ``K`` may be empty."""
    K = np.asarray(K, dtype=float).reshape(-1, 3)
    p = params.P_vec - K.sum(axis=0)
    return float(p @ p) + field_energy_symbol(K, params)
