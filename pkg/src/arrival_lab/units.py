"""Atomic-unit constants and momentum-space initial states.

Everything in the package is expressed in atomic units (hbar = m_e = 1).
Planck's constant h = 2*pi*hbar is kept explicit because the current
expectation values carry a 1/(m*h) prefactor.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

NEGATIVE_WEIGHT_THRESHOLD = 1e-6


class UnphysicalStateError(ValueError):
    """Raised when a superposition cannot be normalized."""


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.m <= 0:
            raise ValueError("hbar and m must be positive")

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar


ATOMIC = PhysicalConstants()
HBAR = ATOMIC.hbar
MASS = ATOMIC.m
PLANCK = ATOMIC.h


def gaussian_momentum_amplitude(packet: GaussianPacket, p):
    """Minimum-uncertainty Gaussian amplitude <p|psi(0)> centred at ``x0``.

    Accepts scalar or array momenta; returns complex values of the same shape.
    """
    p = np.asarray(p, dtype=float)
    norm = (2.0 * math.pi * packet.dp**2) ** -0.25
    arg = -(((p - packet.p_center) / (2.0 * packet.dp)) ** 2) - 1j * p * packet.x0 / HBAR
    return norm * np.exp(arg)


def gaussian_overlap(p1: float, p2: float, dp: float) -> float:
    """Overlap <psi1|psi2> of two equal-width Gaussians with a common centroid."""
    if dp <= 0:
        raise ValueError("dp must be positive")
    return math.exp(-((p1 - p2) ** 2) / (8.0 * dp**2))


def normalization_alpha(beta: float, overlap: float) -> float:
    norm2 = beta * beta + 2.0 * beta * overlap + 1.0
    if not norm2 > 0.0:
        raise UnphysicalStateError(
            f"beta={beta!r} with overlap={overlap!r} gives a non-positive norm {norm2!r}"
        )
    return norm2**-0.5


def gaussian_lower_tail(center: float, dp: float) -> float:
    # weight of a normalized Gaussian density below p = 0
    return 0.5 * float(erfc(center / (math.sqrt(2.0) * dp)))


@dataclass(frozen=True)
class GaussianPacket:
    """Minimum Gaussian wave packet.

    Attributes
    ----------
    p_center : float
        Average momentum (a.u.), must be positive.
    dp : float
        Momentum spread (a.u.).
    x0 : float
        Centroid position at t = 0 (a.u.).
    """

    p_center: float
    dp: float
    x0: float = 0.0
    neg_threshold: float = field(default=NEGATIVE_WEIGHT_THRESHOLD, compare=False, repr=False)

    def __post_init__(self):
        if not self.dp > 0:
            raise ValueError(f"dp must be positive, got {self.dp!r}")
        if not self.p_center > 0:
            raise ValueError(f"p_center must be positive, got {self.p_center!r}")
        weight = self.negative_momentum_weight()
        if weight > self.neg_threshold:
            warnings.warn(
                f"negative-momentum weight {weight:.3g} exceeds {self.neg_threshold:.1g}",
                stacklevel=3,
            )

    @property
    def sigma_x(self) -> float:
        """Spatial spread hbar/(2 dp)."""
        return HBAR / (2.0 * self.dp)

    @property
    def mean_momentum(self) -> float:
        return self.p_center

    def amplitude(self, p):
        return gaussian_momentum_amplitude(self, p)

    def supports(self) -> list[tuple[float, float]]:
        return [(self.p_center, self.dp)]

    def negative_momentum_weight(self) -> float:
        return gaussian_lower_tail(self.p_center, self.dp)

    def shifted(self, x0: float) -> GaussianPacket:
        return GaussianPacket(self.p_center, self.dp, x0, self.neg_threshold)


@dataclass(frozen=True)
class SuperpositionState:
    """Normalized superposition alpha*(beta*|psi1> + |psi2>) of two Gaussians.

    Both packets share the momentum spread and the centroid; ``alpha`` is
    derived on construction.
    """

    beta: float
    packet1: GaussianPacket
    packet2: GaussianPacket
    alpha: float = field(init=False)

    def __post_init__(self):
        p1, p2 = self.packet1, self.packet2
        if p1.dp != p2.dp:
            raise ValueError("packets must share the momentum spread")
        if p1.x0 != p2.x0:
            raise ValueError("packets must share the centroid")
        if not p2.p_center >= p1.p_center > 0:
            raise ValueError("require p2 >= p1 > 0")
        object.__setattr__(self, "alpha", normalization_alpha(self.beta, self.overlap))

    @classmethod
    def from_momenta(cls, beta: float, p1: float, p2: float, dp: float, x0: float = 0.0):
        return cls(beta, GaussianPacket(p1, dp, x0), GaussianPacket(p2, dp, x0))

    @property
    def overlap(self) -> float:
        return gaussian_overlap(self.packet1.p_center, self.packet2.p_center, self.dp)

    @property
    def dp(self) -> float:
        return self.packet1.dp

    @property
    def x0(self) -> float:
        return self.packet1.x0

    @property
    def sigma_x(self) -> float:
        return HBAR / (2.0 * self.dp)

    @property
    def mean_momentum(self) -> float:
        """Expectation of p, used only to set reference time scales."""
        a2, b = self.alpha**2, self.beta
        p1, p2 = self.packet1.p_center, self.packet2.p_center
        return a2 * (b * b * p1 + p2 + b * self.overlap * (p1 + p2))

    def amplitude(self, p):
        return self.alpha * (self.beta * self.packet1.amplitude(p) + self.packet2.amplitude(p))

    def supports(self) -> list[tuple[float, float]]:
        if self.beta == 0:
            return self.packet2.supports()
        return self.packet1.supports() + self.packet2.supports()

    def negative_momentum_weight(self) -> float:
        p1, p2, dp = self.packet1.p_center, self.packet2.p_center, self.dp
        cross = self.overlap * gaussian_lower_tail(0.5 * (p1 + p2), dp)
        w = self.beta**2 * gaussian_lower_tail(p1, dp) + gaussian_lower_tail(p2, dp) + 2.0 * self.beta * cross
        return self.alpha**2 * w

    def shifted(self, x0: float) -> SuperpositionState:
        return SuperpositionState(self.beta, self.packet1.shifted(x0), self.packet2.shifted(x0))


def superposition_amplitude(state: SuperpositionState, p):
    return state.amplitude(p)


def negative_momentum_weight(state) -> float:
    return state.negative_momentum_weight()
