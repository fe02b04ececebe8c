"""Free propagation and the rectangular barrier on [0, d].

The transmission amplitude follows the convention in which an incident
plane wave exp(ipx/hbar) leaves the barrier as T(p) exp(ipx/hbar) for
x > d, so the exp(-ikd) factor is part of T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import HBAR, MASS


@dataclass(frozen=True)
class ScatteringModel:
    """Either free space (``d == 0``) or a rectangular barrier of width ``d``
    and height ``v0``."""

    d: float = 0.0
    v0: float = 0.0

    def __post_init__(self):
        if self.d < 0 or self.v0 < 0:
            raise ValueError("barrier width and height must be non-negative")
        if (self.d == 0) != (self.v0 == 0):
            raise ValueError("a barrier needs both d > 0 and v0 > 0")

    @classmethod
    def free(cls) -> ScatteringModel:
        return cls()

    @classmethod
    def barrier(cls, d: float, p_barrier: float = 0.8) -> ScatteringModel:
        """Barrier of width ``d`` whose height gives sqrt(2 m V0) = ``p_barrier``."""
        if not (d > 0 and p_barrier > 0):
            raise ValueError("barrier needs d > 0 and p_barrier > 0")
        return cls(d=float(d), v0=p_barrier**2 / (2.0 * MASS))

    @property
    def is_free(self) -> bool:
        return self.d == 0

    @property
    def variant(self) -> str:
        return "free" if self.is_free else "barrier"

    @property
    def p_barrier(self) -> float:
        return math.sqrt(2.0 * MASS * self.v0)

    def transmission(self, p):
        return transmission_amplitude(self, p)


def _sinhc(z):
    # sinh(z)/z, entire; series near the removable point z = 0
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, 1.0 + z2 / 6.0 + z2 * z2 / 120.0, np.sinh(zs) / zs)


def transmission_amplitude(model: ScatteringModel, p):
    """Complex transmission amplitude T(p) for p > 0.

    With k = p/hbar and kappa = sqrt(p_B^2 - p^2)/hbar (imaginary above the
    barrier top),

        T = exp(-ikd) / [cosh(kappa d) + (i/2)(kappa/k - k/kappa) sinh(kappa d)].

    The k/kappa term is written as k*d*sinhc(kappa*d) so p = p_B needs no
    special branch.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("transmission amplitude is defined for p > 0 only")
    if model.is_free:
        return np.ones_like(p, dtype=complex)
    d = model.d
    k = p / HBAR
    kappa = np.sqrt((model.p_barrier**2 - p**2).astype(complex)) / HBAR
    kd = kappa * d
    denom = np.cosh(kd) + 0.5j * (kappa / k * np.sinh(kd) - k * d * _sinhc(kd))
    return np.exp(-1j * k * d) / denom


def transmission_probability(model: ScatteringModel, p):
    return np.abs(transmission_amplitude(model, p)) ** 2
