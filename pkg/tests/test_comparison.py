import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrival_lab import comparison
from arrival_lab.comparison import (
    TimeSeries,
    delta_at,
    extract_features,
    refine_extremum,
    relative_difference,
    scan,
)
from arrival_lab.protocol import preset
from arrival_lab.quadrature import NumericalFailure


def make_series(t, j, jp):
    t = np.asarray(t, float)
    return TimeSeries("synthetic", t, t / t[-1], np.asarray(j, float), np.asarray(jp, float),
                      np.asarray(jp, float), 1.0)


def test_relative_difference_examples():
    assert relative_difference(0.3, 0.3) == (0.0, 0.0)
    d, d_abs = relative_difference(-2.92, 1.0)
    assert d == pytest.approx(3.92)
    assert d_abs == pytest.approx(-1.92)
    d, _ = relative_difference(-500.0, 1.0)
    assert d == pytest.approx(500.0, rel=0.01)


def test_relative_difference_undefined():
    d, d_abs = relative_difference(1.0, 0.0)
    assert np.isnan(d) and np.isnan(d_abs)


@settings(max_examples=200)
@given(j=st.floats(-1e3, 1e3), jp=st.floats(1e-12, 1e3))
def test_delta_pair_identity(j, jp):
    d, d_abs = relative_difference(j, jp)
    if j >= 0:
        assert d == d_abs
    else:
        assert d + d_abs == pytest.approx(2.0, rel=1e-14, abs=1e-14)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(1e-6, 10)), min_size=2, max_size=40))
def test_series_identity(pairs):
    j = [a for a, _ in pairs]
    jp = [b for _, b in pairs]
    s = make_series(np.arange(1, len(pairs) + 1), j, jp)
    neg = s.j < 0
    assert np.array_equal(s.delta[~neg], s.delta_abs[~neg])
    np.testing.assert_allclose(s.delta[neg] + s.delta_abs[neg], 2.0, rtol=1e-14)


def test_series_validation():
    with pytest.raises(ValueError):
        make_series([1.0], [1.0], [1.0])
    with pytest.raises(ValueError):
        make_series([1.0, 1.0], [1.0, 1.0], [1.0, 1.0])


def test_monotone_positive_series_has_no_features():
    t = np.linspace(0, 10, 50)
    s = make_series(t, 1 + t, 2 + 3 * t)
    rep = extract_features(s)
    assert rep.zero_crossings == [] and rep.negativity_intervals == []


def test_synthetic_negativity_and_extrema():
    t = np.linspace(0, 2 * np.pi, 401)
    s = make_series(t, np.sin(t), np.ones_like(t))
    rep = extract_features(s, refine=False)
    assert len(rep.negativity_intervals) == 1
    lo, hi = rep.negativity_intervals[0]
    assert lo == pytest.approx(np.pi, abs=0.02) and hi == pytest.approx(2 * np.pi, abs=0.02)
    (tmax, vmax), = rep.dominant_maxima(1)
    assert tmax == pytest.approx(1.5 * np.pi, abs=1e-4) and vmax == pytest.approx(2.0, abs=1e-5)


def test_scan_poisons_failed_samples(monkeypatch):
    sc = preset("fig1b", grid=16)
    real = comparison.current_sample

    def flaky(state, model, X, t, quad, trans):
        if abs(t - sc.window[1] / 3) < 1e-9 or t == sc.window[0]:
            raise NumericalFailure("forced")
        return real(state, model, X, t, quad, trans)

    monkeypatch.setattr(comparison, "current_sample", flaky)
    grid = np.linspace(*sc.window, 16)
    grid[5] = sc.window[1] / 3
    s = scan(sc, np.sort(grid))
    assert np.isnan(s.delta[0]) and s.valid.sum() == 14


def test_fig1_features_and_sign_law():
    sc = preset("fig1b", grid=256)
    s = scan(sc)
    rep = extract_features(s)
    tn = sc.normalized_time(np.array(rep.zero_crossings))
    assert tn == pytest.approx([1 / 3, 2 / 3], abs=0.01)
    assert delta_at(sc, sc.t0) < 0


def test_grid_refinement_stability():
    coarse = extract_features(scan(preset("fig1b", grid=64)))
    fine = extract_features(scan(preset("fig1b", grid=128)))
    spacing = 600.0 / 63
    assert len(coarse.zero_crossings) == len(fine.zero_crossings) == 2
    for a, b in zip(coarse.zero_crossings, fine.zero_crossings):
        assert abs(a - b) < spacing
    (ta, _), (tb, _) = coarse.minima[0], fine.minima[0]
    assert abs(ta - tb) < spacing


def test_refine_extremum_finds_vertex():
    sc = preset("fig1b")
    t, v = refine_extremum(sc, 250.0, 350.0, kind="min")
    assert t == pytest.approx(300.0, abs=0.5)
    assert v == pytest.approx(-2e-4, rel=0.01)
