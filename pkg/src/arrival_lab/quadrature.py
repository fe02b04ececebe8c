"""Composite Gauss-Legendre quadrature sized for oscillatory integrands,
plus a bisection root finder.

Integrals are evaluated with a panel count ``n`` and again with ``2n``;
the difference is the error estimate. Panel counts double until the
estimate meets the tolerance or the cap is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

GL_ORDER = 16


class NumericalFailure(RuntimeError):
    """Quadrature or solver did not converge.

    ``achieved`` carries the best error estimate (or bracket width) reached.
    """

    def __init__(self, message: str, achieved: float = math.nan):
        super().__init__(message)
        self.achieved = achieved


class BracketError(ValueError):
    """The root-finding bracket does not contain a sign change."""


@dataclass(frozen=True)
class QuadratureSpec:
    n_sigma: float = 12.0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-14
    max_panels: int = 2**16
    nodes_per_wavelength: float = 8.0

    def __post_init__(self):
        if self.n_sigma < 6:
            raise ValueError("n_sigma must be >= 6")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.nodes_per_wavelength < 4:
            raise ValueError("nodes_per_wavelength must be >= 4")
        if self.max_panels < 1:
            raise ValueError("max_panels must be positive")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=8)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _panel_nodes(a: float, b: float, n: int):
    x, w = _gauss_legendre(GL_ORDER)
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# panels per integrand call; bounds memory for matrix-valued integrands
_CHUNK_PANELS = 256


def _apply(f, a, b, n):
    edges = np.linspace(a, b, n + 1)
    total = 0.0
    for k in range(0, n, _CHUNK_PANELS):
        m = min(_CHUNK_PANELS, n - k)
        nodes, weights = _panel_nodes(edges[k], edges[k + m], m)
        total = total + np.asarray(f(nodes)) @ weights
    return total


def integrate_panels(
    f: Callable[[np.ndarray], np.ndarray],
    intervals: Sequence[tuple[float, float]],
    initial_panels: Sequence[int],
    spec: QuadratureSpec = DEFAULT_QUAD,
    with_error: bool = False,
):
    """Integrate ``f`` over a union of disjoint intervals.

    ``f`` maps an array of nodes of shape (n,) to values of shape (..., n);
    the result has shape (...). Convergence is required componentwise.
    """
    total = 0.0
    total_err = 0.0
    for (a, b), n in zip(intervals, initial_panels):
        if b <= a:
            continue
        n = max(1, int(n))
        coarse = _apply(f, a, b, n)
        while True:
            fine = _apply(f, a, b, 2 * n)
            err = np.abs(fine - coarse)
            tol = np.maximum(spec.rel_tol * np.abs(fine), spec.abs_tol)
            if np.all(err <= tol):
                break
            if 4 * n > spec.max_panels:
                raise NumericalFailure(
                    f"quadrature on [{a:.6g}, {b:.6g}] not converged with {2 * n} panels",
                    achieved=float(np.max(err)),
                )
            n *= 2
            coarse = fine
        total = total + fine
        total_err = total_err + err
    if with_error:
        return total, total_err
    return total


def momentum_intervals(supports: Sequence[tuple[float, float]], n_sigma: float):
    """Truncated, merged integration intervals on p >= 0."""
    if not supports:
        raise ValueError("at least one support is required")
    raw = []
    for center, width in supports:
        if not width > 0:
            raise ValueError("support widths must be positive")
        raw.append((max(0.0, center - n_sigma * width), center + n_sigma * width, width))
    raw.sort()
    merged = [list(raw[0])]
    for a, b, w in raw[1:]:
        last = merged[-1]
        if a <= last[1]:
            last[1] = max(last[1], b)
            last[2] = min(last[2], w)
        else:
            merged.append([a, b, w])
    return [tuple(m) for m in merged]


def integrate_momentum(
    integrand: Callable[[np.ndarray], np.ndarray],
    supports: Sequence[tuple[float, float]],
    phase_rate: Callable[[np.ndarray], np.ndarray] | None = None,
    spec: QuadratureSpec = DEFAULT_QUAD,
    with_error: bool = False,
):
    """Integrate over the n_sigma-truncated union of Gaussian supports.

    The starting panel count resolves both the narrowest support width and
    the local oscillation wavelength 2*pi/phase_rate with at least
    ``spec.nodes_per_wavelength`` nodes.
    """
    intervals = []
    panels = []
    for a, b, width in momentum_intervals(supports, spec.n_sigma):
        n = math.ceil((b - a) / (2.0 * width))
        if phase_rate is not None:
            probe = np.linspace(a, b, 33)
            rate = float(np.max(np.abs(phase_rate(probe))))
            cycles = (b - a) * rate / (2.0 * math.pi)
            n = max(n, math.ceil(cycles * spec.nodes_per_wavelength / GL_ORDER))
        intervals.append((a, b))
        panels.append(n)
    return integrate_panels(integrand, intervals, panels, spec, with_error)


def find_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Bisection for a sign change of ``f`` in [lo, hi]."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")
    for _ in range(max_iter):
        if abs(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0:
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    else:
        raise NumericalFailure("bisection iteration cap reached", achieved=abs(hi - lo))
    return 0.5 * (lo + hi)
