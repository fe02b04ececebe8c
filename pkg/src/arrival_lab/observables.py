"""Expectation values of the current and of its positive-definite version.

Both are built from the momentum functional

    I[f](X, t) = int_0^inf dp T(p) f(p) <p|psi_in> exp(-i p^2 t / 2m hbar) exp(i p X / hbar)

evaluated on the freely evolving transmitted state:

    <J>  = Re(conj(I[p]) I[1]) / (m h)
    <J+> = |I[sqrt p]|^2 / (m h)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .quadrature import (
    DEFAULT_QUAD,
    GL_ORDER,
    QuadratureSpec,
    integrate_momentum,
    integrate_panels,
    momentum_intervals,
)
from .scattering import ScatteringModel, transmission_amplitude
from .units import HBAR, MASS, PLANCK

WEIGHTS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "1": np.ones_like,
    "p": lambda p: p,
    "sqrt": np.sqrt,
}

Weight = Union[str, Callable[[np.ndarray], np.ndarray]]

# x-blocks for position-space evaluation keep the (x, p) matrices small
_X_BLOCK = 256


class DegenerateScenario(ValueError):
    """Raised when the transmitted channel carries no probability."""


@dataclass(frozen=True)
class DetectorConfig:
    X: float


@dataclass(frozen=True)
class CurrentSample:
    t: float
    j: float
    j_plus: float
    p_x: float


def _weight_fn(w: Weight):
    if callable(w):
        return w
    try:
        return WEIGHTS[w]
    except KeyError:
        raise ValueError(f"unknown weight {w!r}; expected one of {sorted(WEIGHTS)}") from None


def transmitted_amplitude(state, model: ScatteringModel, p):
    """<p|psi_tr> = T(p) <p|psi_in> on p > 0."""
    return transmission_amplitude(model, p) * state.amplitude(p)


def _phase_rate(state, model: ScatteringModel, X: float, t: float):
    # derivative of the propagator phase, plus the barrier's own phase slope
    def rate(p):
        return np.abs(X - state.x0 - p * t / MASS) / HBAR + model.d / HBAR

    return rate


def functional_I(
    weight: Weight | Sequence[Weight],
    state,
    model: ScatteringModel,
    X: float,
    t: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
):
    """Evaluate I[f] for one weight or for a sequence of weights sharing nodes.

    Returns a complex scalar for a single weight, otherwise an array.
    """
    single = isinstance(weight, str) or callable(weight)
    fns = [_weight_fn(weight)] if single else [_weight_fn(w) for w in weight]

    def integrand(p):
        base = transmitted_amplitude(state, model, p) * np.exp(
            1j * (p * X - p * p * t / (2.0 * MASS)) / HBAR
        )
        return np.stack([f(p) * base for f in fns])

    out = integrate_momentum(integrand, state.supports(), _phase_rate(state, model, X, t), quad)
    return complex(out[0]) if single else out


def transmittance(state, model: ScatteringModel, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Norm of the transmitted state, int |T(p)|^2 |<p|psi_in>|^2 dp."""

    def integrand(p):
        return np.abs(transmitted_amplitude(state, model, p)) ** 2

    return float(integrate_momentum(integrand, state.supports(), None, quad))


def _currents(state, model, X, t, quad):
    i1, ip, isq = functional_I(("1", "p", "sqrt"), state, model, X, t, quad)
    j = (np.conj(ip) * i1).real / (MASS * PLANCK)
    j_plus = abs(isq) ** 2 / (MASS * PLANCK)
    return float(j), float(j_plus)


def expectation_J(state, model, X, t, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    i1, ip = functional_I(("1", "p"), state, model, X, t, quad)
    return float((np.conj(ip) * i1).real / (MASS * PLANCK))


def expectation_Jplus(state, model, X, t, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    isq = functional_I("sqrt", state, model, X, t, quad)
    return abs(isq) ** 2 / (MASS * PLANCK)


def _check_transmittance(trans: float) -> float:
    if not trans > 0:
        raise DegenerateScenario(f"transmittance is {trans!r}; nothing reaches the detector")
    return trans


def arrival_distribution(
    state, model, X, t, quad: QuadratureSpec = DEFAULT_QUAD, trans: float | None = None
) -> float:
    """Normalized arrival-time density <J+>/T at (X, t)."""
    if trans is None:
        trans = transmittance(state, model, quad)
    return expectation_Jplus(state, model, X, t, quad) / _check_transmittance(trans)


def current_sample(
    state, model, X, t, quad: QuadratureSpec = DEFAULT_QUAD, trans: float | None = None
) -> CurrentSample:
    """All three observables at one time, sharing the momentum nodes."""
    if trans is None:
        trans = transmittance(state, model, quad)
    _check_transmittance(trans)
    j, j_plus = _currents(state, model, X, t, quad)
    return CurrentSample(t=float(t), j=j, j_plus=j_plus, p_x=j_plus / trans)


# --- position representation -------------------------------------------------


def transmitted_wavefunction(state, model, x, t, quad: QuadratureSpec = DEFAULT_QUAD):
    """psi_tr(x, t) = (2 pi hbar)^(-1/2) I[1](x, t) on an array of positions."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=complex)
    flat = x.ravel()
    res = out.reshape(-1)
    x0 = state.x0
    for start in range(0, flat.size, _X_BLOCK):
        xs = flat[start : start + _X_BLOCK]
        lo, hi = xs.min(), xs.max()

        def integrand(p, xs=xs):
            base = transmitted_amplitude(state, model, p) * np.exp(-1j * p * p * t / (2.0 * MASS * HBAR))
            return np.exp(1j * np.outer(xs, p) / HBAR) * base[None, :]

        def rate(p, lo=lo, hi=hi):
            far = np.maximum(np.abs(lo - x0 - p * t / MASS), np.abs(hi - x0 - p * t / MASS))
            return far / HBAR + model.d / HBAR

        res[start : start + xs.size] = integrate_momentum(integrand, state.supports(), rate, quad)
    return out / math.sqrt(2.0 * math.pi * HBAR)


def transmitted_position_density(state, model, x, t, quad: QuadratureSpec = DEFAULT_QUAD):
    dens = np.abs(transmitted_wavefunction(state, model, x, t, quad)) ** 2
    return float(dens[0]) if np.ndim(x) == 0 else dens


def _group_delay_positions(state, model, t, quad):
    # stationary-phase positions x0 - dtheta/dp + p t/m over the momentum support
    xs = []
    for a, b, _ in momentum_intervals(state.supports(), quad.n_sigma):
        p = np.linspace(max(a, 1e-12), b, 2001)
        theta = np.unwrap(np.angle(transmission_amplitude(model, p)))
        slope = np.gradient(theta, p)
        xs.append(state.x0 - HBAR * slope + p * t / MASS)
    xs = np.concatenate(xs)
    return float(xs.min()), float(xs.max())


def position_window(state, model, t, quad: QuadratureSpec = DEFAULT_QUAD) -> tuple[float, float]:
    """Interval outside of which the transmitted density is negligible at time t."""
    lo, hi = _group_delay_positions(state, model, t, quad)
    pad = quad.n_sigma * state.sigma_x
    return lo - pad, hi + pad


def _x_panels(state, model, a, b, quad):
    # |psi|^2 carries wavenumbers up to the full momentum extent
    supports = momentum_intervals(state.supports(), quad.n_sigma)
    k_max = (supports[-1][1] - supports[0][0]) / HBAR
    cycles = (b - a) * k_max / (2.0 * math.pi)
    n = max(math.ceil(cycles * quad.nodes_per_wavelength / GL_ORDER), math.ceil((b - a) / state.sigma_x))
    return n


def position_tail_probability(
    state,
    model,
    bound: float,
    side: str,
    t: float,
    quad: QuadratureSpec = DEFAULT_QUAD,
) -> float:
    """Probability of the transmitted state below or above ``bound`` at time t."""
    if side not in ("below", "above"):
        raise ValueError(f"side must be 'below' or 'above', got {side!r}")
    lo, hi = position_window(state, model, t, quad)
    if side == "below":
        a, b = lo, min(bound, hi)
    else:
        a, b = max(bound, lo), hi
    if b <= a:
        return 0.0

    def integrand(xs):
        return np.abs(transmitted_wavefunction(state, model, xs, t, quad)) ** 2

    n = _x_panels(state, model, a, b, quad)
    return float(integrate_panels(integrand, [(a, b)], [n], quad))
