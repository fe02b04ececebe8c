"""Experiment geometry: barrier-protocol solvers plus the named presets.

The barrier protocol fixes four quantities in sequence for an incident
Gaussian of momentum spread dp:

* x0  -- initial centroid, so that only eps*T of the initial packet lies at x > 0;
* t_i -- detector switch-on, when only eps*T of the transmitted packet is still at x < d;
* X   -- detector position, so that only eps*T of the transmitted packet is beyond X at t_i;
* t_f -- switch-off, when <J+> has fallen back to its value at t_i.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import erfc

from .analytic import classical_time
from .observables import expectation_Jplus, position_tail_probability, transmittance
from .quadrature import DEFAULT_QUAD, BracketError, NumericalFailure, QuadratureSpec, find_root
from .scattering import ScatteringModel
from .units import HBAR, MASS, GaussianPacket, SuperpositionState

log = logging.getLogger(__name__)

State = Union[GaussianPacket, SuperpositionState]

# threshold that reproduces the reference barrier tables; see README
TABLE_EPSILON = 1e-4
P0_BARRIER_RUNS = 0.5
P_BARRIER = 0.8

# reference geometries (d -> x0, t_i, t_f, X) for the two barrier series
REFERENCE_ROWS = {
    "table1": {
        2.0: (-201.8, 785.0, 1550.0, 379.0),
        4.0: (-228.0, 839.0, 1600.0, 382.0),
        8.0: (-275.4, 933.0, 1700.0, 386.5),
        12.0: (-316.6, 1014.0, 1800.0, 391.0),
    },
    "table2": {
        2.0: (-20.15, 145.7, 530.0, 112.9),
        4.0: (-22.48, 137.0, 470.0, 108.5),
        8.0: (-25.84, 141.1, 390.0, 117.3),
        10.0: (-28.30, 254.0, 573.0, 229.4),
    },
}
TABLE_DP = {"table1": 0.01, "table2": 0.1}
FIG1_DPS = (1e-4, 1e-3, 1e-2)

PRESET_IDS = ("fig1", "fig1a", "fig1b", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "table1", "table2")


class UnknownPreset(KeyError):
    pass


@dataclass(frozen=True)
class ProtocolThresholds:
    epsilon: float = 1e-3
    root_tol: float = 1e-2

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not self.root_tol > 0:
            raise ValueError("root_tol must be positive")


@dataclass(frozen=True)
class Scenario:
    state: State
    model: ScatteringModel
    X: float
    window: tuple[float, float]
    grid: int = 1024
    quad: QuadratureSpec = DEFAULT_QUAD
    preset_id: str | None = None
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        t_i, t_f = self.window
        if not t_f > t_i:
            raise ValueError(f"window must satisfy t_f > t_i, got {self.window}")
        if not self.model.is_free and not self.X > self.model.d:
            raise ValueError("barrier scenarios need the detector behind the barrier (X > d)")
        if self.grid < 2:
            raise ValueError("grid needs at least two samples")

    @property
    def window_start(self) -> float:
        return self.window[0]

    @property
    def window_end(self) -> float:
        return self.window[1]

    @property
    def t0(self) -> float:
        return classical_time(self.state.mean_momentum, self.state.x0, self.X)

    def normalized_time(self, t):
        return normalize_time(t, "window", window=self.window)

    def with_grid(self, grid: int) -> Scenario:
        return replace(self, grid=int(grid))


def normalize_time(t, mode: str, t0: float | None = None, window: tuple[float, float] | None = None):
    """Map times onto [0, 1]: t/(2 t0) or (t - t_i)/(t_f - t_i)."""
    t = np.asarray(t, dtype=float)
    if mode == "free_halfwindow":
        if not t0 or t0 <= 0:
            raise ValueError("free_halfwindow needs t0 > 0")
        out = t / (2.0 * t0)
    elif mode == "window":
        t_i, t_f = window
        if not t_f > t_i:
            raise ValueError("degenerate window")
        out = (t - t_i) / (t_f - t_i)
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    return float(out) if out.ndim == 0 else out


# --- barrier protocol ---------------------------------------------------------


def initial_right_tail(packet: GaussianPacket, x0: float) -> float:
    """Probability at x > 0 of the initial Gaussian centred at x0."""
    sigma = packet.sigma_x
    return 0.5 * float(erfc(-x0 / (math.sqrt(2.0) * sigma)))


def solve_x0(packet: GaussianPacket, model: ScatteringModel, thresholds: ProtocolThresholds,
             quad: QuadratureSpec = DEFAULT_QUAD, trans: float | None = None) -> float:
    if trans is None:
        trans = transmittance(packet, model, quad)
    target = thresholds.epsilon * trans
    span = 60.0 * packet.sigma_x
    return find_root(lambda x0: initial_right_tail(packet, x0) - target, -span, span,
                     tol=1e-10 * packet.sigma_x)


def solve_ti(packet: GaussianPacket, model: ScatteringModel, thresholds: ProtocolThresholds,
             quad: QuadratureSpec = DEFAULT_QUAD, trans: float | None = None, t_max: float = 1e6) -> float:
    """First time at which only eps*T of the transmitted packet remains below x = d."""
    if trans is None:
        trans = transmittance(packet, model, quad)
    target = thresholds.epsilon * trans

    def residual(t):
        return position_tail_probability(packet, model, model.d, "below", t, quad) - target

    lo = 0.0
    hi = max(1.0, (model.d - packet.x0) * MASS / packet.p_center)
    while residual(hi) > 0:
        lo, hi = hi, 2.0 * hi
        if hi > t_max:
            raise BracketError(f"no switch-on time below t = {t_max:g}")
    return find_root(residual, lo, hi, thresholds.root_tol)


def solve_X(packet: GaussianPacket, model: ScatteringModel, t_i: float, thresholds: ProtocolThresholds,
            quad: QuadratureSpec = DEFAULT_QUAD, trans: float | None = None) -> float:
    """Detector position beyond which only eps*T of the transmitted packet lies at t_i."""
    if trans is None:
        trans = transmittance(packet, model, quad)
    target = thresholds.epsilon * trans
    hi = model.d + 10.0 * (packet.p_center + 4.0 * packet.dp) * t_i / MASS
    return find_root(
        lambda X: position_tail_probability(packet, model, X, "above", t_i, quad) - target,
        model.d,
        hi,
        thresholds.root_tol,
    )


def solve_tf(state: State, model: ScatteringModel, X: float, t_start: float,
             quad: QuadratureSpec = DEFAULT_QUAD, n_scan: int = 1024, tol: float = 1e-2,
             horizon: float | None = None) -> float:
    """Switch-off time: <J+> falls back to its value at ``t_start`` after its peak.

    When interference makes <J+> dip below the start level and recover, the
    final downward crossing is used, after which <J+> stays below the level
    up to the scan horizon (default 10 classical flight times).
    """
    t0 = classical_time(state.mean_momentum, state.x0, X)
    if horizon is None:
        horizon = t_start + 10.0 * t0
    ts = np.linspace(t_start, horizon, n_scan)
    jp = np.array([expectation_Jplus(state, model, X, t, quad) for t in ts])
    level = jp[0]
    peak = int(np.argmax(jp))
    above = np.nonzero(jp[peak:] > level)[0]
    last = peak + int(above[-1])
    if last >= n_scan - 1:
        raise NumericalFailure(f"<J+> does not return to its start level before t = {horizon:g}")
    return find_root(lambda t: expectation_Jplus(state, model, X, t, quad) - level,
                     ts[last], ts[last + 1], tol)


@dataclass(frozen=True)
class ProtocolResult:
    d: float
    dp: float
    x0: float
    t_i: float
    t_f: float
    X: float
    transmittance: float
    epsilon: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def solve_protocol(dp: float, d: float, thresholds: ProtocolThresholds | None = None,
                   quad: QuadratureSpec = DEFAULT_QUAD, p0: float = P0_BARRIER_RUNS,
                   p_barrier: float = P_BARRIER) -> ProtocolResult:
    """Run the four solvers in sequence for one barrier width."""
    thresholds = thresholds or ProtocolThresholds(epsilon=TABLE_EPSILON)
    model = ScatteringModel.barrier(d, p_barrier)
    packet = GaussianPacket(p0, dp, 0.0)
    trans = transmittance(packet, model, quad)
    x0 = solve_x0(packet, model, thresholds, quad, trans)
    packet = packet.shifted(x0)
    t_i = solve_ti(packet, model, thresholds, quad, trans)
    X = solve_X(packet, model, t_i, thresholds, quad, trans)
    t_f = solve_tf(packet, model, X, t_i, quad, tol=thresholds.root_tol)
    return ProtocolResult(d, dp, x0, t_i, t_f, X, trans, thresholds.epsilon)


@lru_cache(maxsize=64)
def _cached_protocol(dp, d, epsilon, root_tol, quad):
    return solve_protocol(dp, d, ProtocolThresholds(epsilon, root_tol), quad)


@dataclass
class ProtocolTable:
    table_id: str
    dp: float
    epsilon: float
    rows: dict[float, ProtocolResult]

    @property
    def complete(self) -> bool:
        return all(r.ok for r in self.rows.values())


def solve_table(table_id: str, epsilon: float = TABLE_EPSILON, quad: QuadratureSpec = DEFAULT_QUAD,
                root_tol: float = 1e-2) -> ProtocolTable:
    """Solve every row of a barrier series; failed rows are kept with NaNs."""
    if table_id not in REFERENCE_ROWS:
        raise UnknownPreset(table_id)
    dp = TABLE_DP[table_id]
    rows = {}
    for d in REFERENCE_ROWS[table_id]:
        try:
            rows[d] = _cached_protocol(dp, d, epsilon, root_tol, quad)
        except (NumericalFailure, BracketError) as exc:
            log.warning("%s row d=%g failed: %s", table_id, d, exc)
            nan = float("nan")
            rows[d] = ProtocolResult(d, dp, nan, nan, nan, nan, nan, epsilon, error=str(exc))
    return ProtocolTable(table_id, dp, epsilon, rows)


# --- presets ------------------------------------------------------------------


def _fig1(dp: float, grid: int, quad) -> Scenario:
    packet = GaussianPacket(0.5, dp, 0.0)
    X = 3.0 * packet.sigma_x
    t0 = classical_time(packet.p_center, 0.0, X)
    return Scenario(packet, ScatteringModel.free(), X, (0.0, 2.0 * t0), grid, quad, "fig1",
                    meta={"dp": dp})


@lru_cache(maxsize=16)
def _free_superposition(preset_id: str, grid: int, quad: QuadratureSpec) -> Scenario:
    if preset_id in ("fig2", "fig3"):
        p1 = 0.4 if preset_id == "fig2" else 0.2
        state = SuperpositionState.from_momenta(2.0, p1, 0.5, 0.01, 0.0)
        X = 3.0 * HBAR / (2.0 * state.dp)
        t_f = solve_tf(state, ScatteringModel.free(), X, 0.0, quad)
        return Scenario(state, ScatteringModel.free(), X, (0.0, t_f), grid, quad, preset_id)
    state = SuperpositionState.from_momenta(100.0, 4e-3, 1.0, 5e-4, 0.0)
    X = 3.0 * HBAR / (2.0 * state.dp)
    # a few interference periods around the fast packet's arrival
    t_fast = classical_time(state.packet2.p_center, state.x0, X)
    half = 5.0 * 4.0 * math.pi * MASS * HBAR / state.packet2.p_center**2
    return Scenario(state, ScatteringModel.free(), X, (t_fast - half, t_fast + half), grid, quad, preset_id)


def barrier_scenario(dp: float, d: float, geometry: str = "solved", epsilon: float = TABLE_EPSILON,
                     grid: int = 1024, quad: QuadratureSpec = DEFAULT_QUAD, preset_id: str | None = None,
                     root_tol: float = 1e-2) -> Scenario:
    """Barrier run with either solved or reference (x0, t_i, t_f, X)."""
    if geometry == "solved":
        r = _cached_protocol(dp, float(d), epsilon, root_tol, quad)
        x0, t_i, t_f, X = r.x0, r.t_i, r.t_f, r.X
    elif geometry == "reference":
        table = "table1" if dp == 0.01 else "table2"
        try:
            x0, t_i, t_f, X = REFERENCE_ROWS[table][float(d)]
        except KeyError:
            raise UnknownPreset(f"no reference geometry for dp={dp}, d={d}") from None
    else:
        raise ValueError(f"geometry must be 'solved' or 'reference', got {geometry!r}")
    packet = GaussianPacket(P0_BARRIER_RUNS, dp, x0)
    model = ScatteringModel.barrier(d, P_BARRIER)
    return Scenario(packet, model, X, (t_i, t_f), grid, quad, preset_id,
                    meta={"dp": dp, "d": float(d), "geometry": geometry, "epsilon": epsilon})


def preset(preset_id: str, *, grid: int = 1024, quad: QuadratureSpec = DEFAULT_QUAD,
           epsilon: float = TABLE_EPSILON, dp: float | None = None, d: float | None = None,
           geometry: str | None = None):
    """Named scenario. Table ids return a solved :class:`ProtocolTable`.

    ``dp`` selects the member of the fig1 sweep (default 0.01) and ``d`` the
    barrier width of fig5 (default 2). fig6/fig7 use the reference geometry
    unless ``geometry='solved'``; fig5 is solved unless ``geometry='reference'``.
    """
    if preset_id in ("fig1", "fig1a", "fig1b"):
        s = _fig1(0.01 if dp is None else dp, grid, quad)
        return replace(s, preset_id=preset_id)
    if preset_id in ("fig2", "fig3", "fig4"):
        return _free_superposition(preset_id, grid, quad)
    if preset_id == "fig5":
        return barrier_scenario(0.01, 2.0 if d is None else d, geometry or "solved", epsilon, grid, quad, "fig5")
    if preset_id == "fig6":
        return barrier_scenario(0.1, 8.0, geometry or "reference", epsilon, grid, quad, "fig6")
    if preset_id == "fig7":
        return barrier_scenario(0.1, 10.0, geometry or "reference", epsilon, grid, quad, "fig7")
    if preset_id in ("table1", "table2"):
        return solve_table(preset_id, epsilon, quad)
    raise UnknownPreset(f"unknown preset {preset_id!r}; choose from {', '.join(PRESET_IDS)}")


def preset_family(preset_id: str, **kwargs) -> list[Scenario]:
    """All members of a sweep preset (fig1 over dp, fig5 over d)."""
    if preset_id in ("fig1", "fig1a"):
        return [preset(preset_id, dp=dp, **kwargs) for dp in FIG1_DPS]
    if preset_id == "fig5":
        return [preset("fig5", d=d, **kwargs) for d in REFERENCE_ROWS["table1"]]
    return [preset(preset_id, **kwargs)]
