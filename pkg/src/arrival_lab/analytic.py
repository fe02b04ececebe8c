"""Closed forms for the free minimum Gaussian packet.

The second-order expansion of <J+> in dp/p0 is built on the exact Gaussian
current. The leading-order interference current of a two-packet
superposition is included as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import HBAR, MASS, PLANCK, GaussianPacket, SuperpositionState


@dataclass(frozen=True)
class DeltaLambda:
    delta: complex
    lam: complex

    def __post_init__(self):
        if not self.delta.real > 0:
            raise ValueError("Re(delta) must be positive")


@dataclass(frozen=True)
class ApproxCoefficients:
    lambda0: float
    lambda1: float
    lambda2: float


@dataclass(frozen=True)
class ValidityWindow:
    rho: float
    sigma: float
    t_range: tuple[float, float]

    def contains(self, t) -> np.ndarray | bool:
        lo, hi = self.t_range
        return (np.asarray(t) >= lo) & (np.asarray(t) <= hi)


def delta_lambda(packet: GaussianPacket, X: float, t: float) -> DeltaLambda:
    dp = packet.dp
    delta = 1.0 / (4.0 * dp**2) + 1j * t / (2.0 * MASS * HBAR)
    lam = (packet.p_center + 2j * dp**2 * (X - packet.x0) / HBAR) / (
        1.0 + 2j * dp**2 * t / (MASS * HBAR)
    )
    return DeltaLambda(complex(delta), complex(lam))


def closed_form_current(packet: GaussianPacket, X, t):
    """Exact probability current of a free minimum Gaussian packet."""
    dp, p0 = packet.dp, packet.p_center
    L = np.asarray(X, dtype=float) - packet.x0
    t = np.asarray(t, dtype=float)
    spread = 1.0 + 4.0 * dp**4 * t**2 / (MASS**2 * HBAR**2)
    prefactor = math.sqrt(2.0 / math.pi) * dp / (MASS * HBAR)
    drift = p0 + 4.0 * dp**4 * L * t / (MASS * HBAR**2)
    gauss = np.exp(-2.0 * dp**2 / HBAR**2 * (L - p0 * t / MASS) ** 2 / spread)
    out = prefactor * drift / spread**1.5 * gauss
    return float(out) if out.ndim == 0 else out


def lambda_coefficients(packet: GaussianPacket, X: float) -> ApproxCoefficients:
    dp, p0 = packet.dp, packet.p_center
    L = X - packet.x0
    if not L > 0:
        raise ValueError("detector must lie ahead of the centroid (X > x0)")
    lam0 = -0.5 * (dp / p0) ** 2 + 2.0 * dp**4 * L**2 / (HBAR**2 * p0**2)
    lam1 = 4.0 * dp**4 * L / (MASS * p0 * HBAR**2)
    lam2 = 2.0 * dp**4 / (MASS**2 * HBAR**2)
    return ApproxCoefficients(lam0, lam1, lam2)


def classical_time(p0: float, x0: float, X: float) -> float:
    if p0 <= 0:
        raise ValueError("p0 must be positive")
    return (X - x0) * MASS / p0


def validity_window(packet: GaussianPacket, X: float) -> ValidityWindow:
    L = X - packet.x0
    if not L > 0:
        raise ValueError("detector must lie ahead of the centroid (X > x0)")
    rho = L * 2.0 * packet.dp / HBAR
    sigma = min(2.0 / rho, (2.0 / rho) ** 2)
    t0 = classical_time(packet.p_center, packet.x0, X)
    return ValidityWindow(rho, sigma, (0.0, sigma * t0))


def jplus_second_order(packet: GaussianPacket, X: float, t, with_flag: bool = False):
    """Second-order approximation [1 + L0 - L1 t + L2 t^2] * J(t) of <J+>.

    With ``with_flag`` also returns a boolean (array) marking samples inside
    the validity window; values outside are still computed.
    """
    c = lambda_coefficients(packet, X)
    t_arr = np.asarray(t, dtype=float)
    factor = 1.0 + c.lambda0 - c.lambda1 * t_arr + c.lambda2 * t_arr**2
    out = factor * closed_form_current(packet, X, t_arr)
    out = float(out) if np.ndim(out) == 0 else out
    if with_flag:
        inside = validity_window(packet, X).contains(t_arr)
        return out, (bool(inside) if np.ndim(inside) == 0 else inside)
    return out


def delta_parabola(packet: GaussianPacket, X: float, t):
    c = lambda_coefficients(packet, X)
    t0 = classical_time(packet.p_center, packet.x0, X)
    out = c.lambda2 * (np.asarray(t, dtype=float) - t0) ** 2 - 0.5 * (packet.dp / packet.p_center) ** 2
    return float(out) if np.ndim(out) == 0 else out


def jplus_bracket_form(packet: GaussianPacket, X: float, t: float) -> float:
    """Unsimplified second-order expression in delta and lambda.

    Kept as a cross-check of :func:`jplus_second_order`; it suffers from
    cancellation and is not used on the production path.
    """
    p0 = packet.p_center
    dl = delta_lambda(packet, X, t)
    lam, m2 = dl.lam, dl.lam**2 + 1.0 / (2.0 * dl.delta)
    re_lam = lam.real
    bracket = (
        0.75 * p0**4
        + 3.0 * p0**3 * re_lam
        + 3.0 * p0**2 * abs(lam) ** 2
        - 0.5 * p0**2 * m2.real
        - p0 * (lam * np.conj(m2)).real
        + abs(m2) ** 2 / 12.0
    )
    return 3.0 / (16.0 * p0**3 * re_lam) * bracket * closed_form_current(packet, X, t)


def interference_current_leading(state: SuperpositionState, X: float, t):
    """Leading-order current of a macroscopic two-packet superposition,
    dominated by the interference term (small dp, p2/p1 >> beta >> 1)."""
    p2 = state.packet2.p_center
    amp = 2.0 * math.sqrt(2.0 * math.pi) / (MASS * PLANCK) * state.beta * state.alpha**2 * state.dp * p2
    phase = p2**2 * np.asarray(t, dtype=float) / (2.0 * HBAR * MASS) - p2 * (X - state.x0) / HBAR
    out = amp * np.cos(phase)
    return float(out) if np.ndim(out) == 0 else out


def interference_period(p2: float) -> float:
    return 4.0 * math.pi * MASS * HBAR / p2**2
