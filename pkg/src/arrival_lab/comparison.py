"""Relative-difference diagnostics on time grids."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .observables import CurrentSample, current_sample, transmittance
from .quadrature import BracketError, NumericalFailure, find_root

log = logging.getLogger(__name__)

J_PLUS_FLOOR = 1e-30


@dataclass(frozen=True)
class DeltaSample:
    t: float
    delta: float
    delta_abs: float
    j_negative: bool


def relative_difference(j: float, j_plus: float, floor: float = J_PLUS_FLOOR) -> tuple[float, float]:
    """Return (1 - j/j_plus, 1 - |j|/j_plus); NaNs mark an undefined sample."""
    if not j_plus > floor:
        return float("nan"), float("nan")
    return 1.0 - j / j_plus, 1.0 - abs(j) / j_plus


@dataclass
class TimeSeries:
    """Observables on an increasing time grid.

    Samples whose evaluation failed are kept with NaN values.
    """

    scenario_id: str
    t: np.ndarray
    t_n: np.ndarray
    j: np.ndarray
    j_plus: np.ndarray
    p_x: np.ndarray
    transmittance: float
    scenario: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.t.size < 2:
            raise ValueError("a time series needs at least two samples")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        with np.errstate(invalid="ignore", divide="ignore"):
            ok = self.j_plus > J_PLUS_FLOOR
            ratio = np.where(ok, self.j / np.where(ok, self.j_plus, 1.0), np.nan)
            self.delta = 1.0 - ratio
            self.delta_abs = 1.0 - np.abs(ratio)

    def __len__(self):
        return self.t.size

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.delta)

    @property
    def samples(self) -> list[tuple[CurrentSample, DeltaSample]]:
        out = []
        for k in range(len(self)):
            cs = CurrentSample(float(self.t[k]), float(self.j[k]), float(self.j_plus[k]), float(self.p_x[k]))
            ds = DeltaSample(float(self.t[k]), float(self.delta[k]), float(self.delta_abs[k]), bool(self.j[k] < 0))
            out.append((cs, ds))
        return out


def scan(scenario, grid: np.ndarray | int | None = None) -> TimeSeries:
    """Evaluate <J>, <J+>, P_X and both relative differences on a grid.

    ``grid`` may be an explicit array of times or a sample count spread
    uniformly over the scenario window (default: the scenario's own count).
    """
    t_i, t_f = scenario.window
    if grid is None:
        grid = scenario.grid
    ts = np.linspace(t_i, t_f, int(grid)) if np.ndim(grid) == 0 else np.asarray(grid, dtype=float)
    trans = transmittance(scenario.state, scenario.model, scenario.quad)
    j = np.full(ts.size, np.nan)
    jp = np.full(ts.size, np.nan)
    for k, t in enumerate(ts):
        try:
            s = current_sample(scenario.state, scenario.model, scenario.X, t, scenario.quad, trans)
        except NumericalFailure as exc:
            log.warning("sample t=%g poisoned: %s", t, exc)
            continue
        j[k], jp[k] = s.j, s.j_plus
    return TimeSeries(
        scenario_id=scenario.preset_id or "custom",
        t=ts,
        t_n=scenario.normalized_time(ts),
        j=j,
        j_plus=jp,
        p_x=jp / trans,
        transmittance=trans,
        scenario=scenario,
    )


def delta_at(scenario, t: float, modulus: bool = False) -> float:
    s = current_sample(scenario.state, scenario.model, scenario.X, t, scenario.quad, trans=1.0)
    d, d_abs = relative_difference(s.j, s.j_plus)
    return d_abs if modulus else d


@dataclass
class FeatureReport:
    zero_crossings: list[float]
    maxima: list[tuple[float, float]]
    minima: list[tuple[float, float]]
    negativity_intervals: list[tuple[float, float]]

    def dominant_maxima(self, n: int) -> list[tuple[float, float]]:
        return sorted(self.maxima, key=lambda m: -m[1])[:n]


def _parabolic_vertex(t, y, k):
    # vertex through (t[k-1], t[k], t[k+1]); falls back to the sample
    t0, t1, t2 = t[k - 1], t[k], t[k + 1]
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom
    b = (t2**2 * (y0 - y1) + t1**2 * (y2 - y0) + t0**2 * (y1 - y2)) / denom
    if a == 0:
        return t1, y1
    tv = -b / (2 * a)
    if not t0 <= tv <= t2:
        return t1, y1
    c = y1 - a * t1**2 - b * t1
    return tv, a * tv**2 + b * tv + c


def _local_extrema(t, y):
    maxima, minima = [], []
    for k in range(1, y.size - 1):
        a, b, c = y[k - 1], y[k], y[k + 1]
        if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(c)):
            continue
        if b > a and b >= c:
            maxima.append(_parabolic_vertex(t, y, k))
        elif b < a and b <= c:
            minima.append(_parabolic_vertex(t, y, k))
    return maxima, minima


def _runs(mask):
    runs, start = [], None
    for k, m in enumerate(mask):
        if m and start is None:
            start = k
        elif not m and start is not None:
            runs.append((start, k - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def extract_features(series: TimeSeries, quantity: str = "delta", refine: bool = True) -> FeatureReport:
    """Collect the features listed in :class:`FeatureReport`.

    Zero crossings are refined by bisection on the scenario when the series
    carries one (else by linear interpolation); extrema get a parabolic
    vertex through three samples.
    """
    if len(series) < 3:
        raise ValueError("feature extraction needs at least three samples")
    t = series.t
    y = getattr(series, quantity)
    crossings = []
    for k in range(t.size - 1):
        a, b = y[k], y[k + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0 or a == b:
            continue
        if a == 0:
            crossings.append(float(t[k]))
            continue
        t_lin = t[k] + (t[k + 1] - t[k]) * a / (a - b)
        if refine and series.scenario is not None and quantity in ("delta", "delta_abs"):
            modulus = quantity == "delta_abs"
            try:
                t_lin = find_root(
                    lambda s: delta_at(series.scenario, s, modulus), t[k], t[k + 1], tol=1e-9 * (1 + abs(t[k]))
                )
            except (BracketError, NumericalFailure):
                pass
        crossings.append(float(t_lin))
    if y[-1] == 0:
        crossings.append(float(t[-1]))
    maxima, minima = _local_extrema(t, y)
    neg = [(float(t[a]), float(t[b])) for a, b in _runs(series.j < 0)]
    return FeatureReport(
        zero_crossings=crossings,
        maxima=[(float(a), float(b)) for a, b in maxima],
        minima=[(float(a), float(b)) for a, b in minima],
        negativity_intervals=neg,
    )


def refine_extremum(scenario, t_lo: float, t_hi: float, kind: str = "max", modulus: bool = False):
    """Locate a local extremum of the relative difference inside [t_lo, t_hi].

    Uses bounded Brent minimization on the exact observables; returns
    ``(t, value)``.
    """
    sign = -1.0 if kind == "max" else 1.0
    res = minimize_scalar(
        lambda s: sign * delta_at(scenario, s, modulus),
        bounds=(t_lo, t_hi),
        method="bounded",
        options={"xatol": 1e-6 * max(1.0, abs(t_hi))},
    )
    return float(res.x), float(sign * res.fun)
