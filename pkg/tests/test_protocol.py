import math

import numpy as np
import pytest
from scipy.special import erfcinv

from arrival_lab.observables import expectation_Jplus, position_tail_probability, transmittance
from arrival_lab.protocol import (
    PRESET_IDS,
    REFERENCE_ROWS,
    ProtocolThresholds,
    Scenario,
    UnknownPreset,
    initial_right_tail,
    normalize_time,
    preset,
    preset_family,
    solve_table,
    solve_tf,
    solve_x0,
)
from arrival_lab.scattering import ScatteringModel
from arrival_lab.units import GaussianPacket


def test_normalize_time_examples():
    assert normalize_time(300.0, "free_halfwindow", t0=300.0) == 0.5
    assert normalize_time(145.7, "window", window=(145.7, 530.0)) == 0.0
    assert normalize_time(530.0, "window", window=(145.7, 530.0)) == 1.0
    x0, t_i, t_f, X = REFERENCE_ROWS["table1"][8.0]
    np.testing.assert_allclose(normalize_time(np.array([933.0, 1700.0]), "window", window=(t_i, t_f)), [0, 1])


@pytest.mark.parametrize("kwargs", [dict(mode="free_halfwindow"), dict(mode="window", window=(5.0, 5.0)),
                                    dict(mode="other")])
def test_normalize_time_errors(kwargs):
    with pytest.raises(ValueError):
        normalize_time(1.0, **kwargs)


def test_thresholds_validation():
    with pytest.raises(ValueError):
        ProtocolThresholds(epsilon=1.5)
    assert ProtocolThresholds().epsilon == 1e-3


def test_scenario_invariants():
    g = GaussianPacket(0.5, 0.01, -50.0)
    with pytest.raises(ValueError):
        Scenario(g, ScatteringModel.free(), 10.0, (5.0, 1.0))
    with pytest.raises(ValueError):
        Scenario(g, ScatteringModel.barrier(4.0), 3.0, (0.0, 1.0))


@pytest.mark.parametrize("eps", [1e-3, 1e-4])
@pytest.mark.parametrize("d", [2.0, 12.0])
def test_solve_x0_matches_erfc_inversion(eps, d):
    g = GaussianPacket(0.5, 0.01)
    model = ScatteringModel.barrier(d)
    trans = transmittance(g, model)
    x0 = solve_x0(g, model, ProtocolThresholds(eps), trans=trans)
    expected = -math.sqrt(2) * g.sigma_x * erfcinv(2 * eps * trans)
    assert x0 == pytest.approx(expected, abs=1e-6)
    assert initial_right_tail(g, x0) == pytest.approx(eps * trans, rel=1e-6)


def test_solve_x0_symmetry_anchor():
    g = GaussianPacket(0.5, 0.01)
    x0 = solve_x0(g, ScatteringModel.free(), ProtocolThresholds(epsilon=0.5 - 1e-15))
    assert abs(x0) < 1e-6


def test_solve_x0_table_anchor():
    g = GaussianPacket(0.5, 0.01)
    x0 = solve_x0(g, ScatteringModel.barrier(12.0), ProtocolThresholds(1e-4))
    assert x0 == pytest.approx(-316.6, rel=0.01)


def test_solve_tf_free_superposition_returns_to_start_level():
    sc = preset("fig2")
    t_f = sc.window[1]
    j0 = expectation_Jplus(sc.state, sc.model, sc.X, 0.0)
    assert expectation_Jplus(sc.state, sc.model, sc.X, t_f) == pytest.approx(j0, rel=1e-3)
    assert t_f == pytest.approx(solve_tf(sc.state, sc.model, sc.X, 0.0), rel=1e-9)


@pytest.fixture(scope="module")
def table1():
    return solve_table("table1")


@pytest.fixture(scope="module")
def table2():
    return solve_table("table2")


@pytest.mark.slow
def test_table_solver_examples(table1, table2):
    assert table1.rows[8.0].t_i == pytest.approx(933.0, rel=0.02)
    assert table1.rows[2.0].X == pytest.approx(379.0, rel=0.02)
    assert table2.rows[4.0].t_i == pytest.approx(137.0, rel=0.02)
    assert table2.rows[10.0].X == pytest.approx(229.4, rel=0.02)
    assert table2.rows[8.0].t_f == pytest.approx(390.0, rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("table_id", ["table1", "table2"])
def test_protocol_self_consistency_and_ordering(table_id, table1, table2):
    table = table1 if table_id == "table1" else table2
    assert table.complete
    for d, r in table.rows.items():
        g = GaussianPacket(0.5, table.dp, r.x0)
        model = ScatteringModel.barrier(d)
        target = r.epsilon * r.transmittance
        assert initial_right_tail(g, r.x0) == pytest.approx(target, rel=0.01)
        assert position_tail_probability(g, model, d, "below", r.t_i) == pytest.approx(target, rel=0.01)
        assert position_tail_probability(g, model, r.X, "above", r.t_i) == pytest.approx(target, rel=0.01)
        j_start = expectation_Jplus(g, model, r.X, r.t_i)
        assert expectation_Jplus(g, model, r.X, r.t_f) == pytest.approx(j_start, rel=0.01)
        assert r.x0 < 0 < d < r.X
        assert 0 < r.t_i < r.t_f


@pytest.mark.slow
def test_protocol_monotonicity(table1, table2):
    for table in (table1, table2):
        x0s = [abs(r.x0) for r in table.rows.values()]
        assert x0s == sorted(x0s)
    t_is = [r.t_i for r in table1.rows.values()]
    assert t_is == sorted(t_is)


@pytest.mark.parametrize("pid", [p for p in PRESET_IDS if not p.startswith("table")])
def test_presets_build(pid):
    sc = preset(pid, grid=32)
    assert sc.grid == 32 and sc.window[1] > sc.window[0]


def test_fig1_preset_geometry():
    sc = preset("fig1b")
    assert sc.X == pytest.approx(150.0) and sc.window == pytest.approx((0.0, 600.0))
    assert sc.t0 == pytest.approx(300.0)


def test_families():
    dps = [s.meta["dp"] for s in preset_family("fig1")]
    assert dps == [1e-4, 1e-3, 1e-2]
    assert [s.meta["d"] for s in preset_family("fig5", grid=16)] == [2.0, 4.0, 8.0, 12.0]
    assert len(preset_family("fig3")) == 1


def test_reference_geometry_preset():
    sc = preset("fig7")
    assert sc.state.x0 == -28.30 and sc.X == 229.4 and sc.window == (254.0, 573.0)
    with pytest.raises(UnknownPreset):
        preset("fig5", d=3.0, geometry="reference")


def test_unknown_preset():
    with pytest.raises(UnknownPreset):
        preset("fig9")
