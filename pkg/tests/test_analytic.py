import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrival_lab.analytic import (
    DeltaLambda,
    classical_time,
    closed_form_current,
    delta_lambda,
    delta_parabola,
    interference_current_leading,
    interference_period,
    jplus_bracket_form,
    jplus_second_order,
    lambda_coefficients,
    validity_window,
)
from arrival_lab.units import GaussianPacket, SuperpositionState

G = GaussianPacket(0.5, 0.01, 0.0)
EPS = 0.01 / 0.5


def test_delta_lambda_at_t0():
    dl = delta_lambda(G, 150.0, 0.0)
    assert dl.delta == 2500.0
    assert dl.lam == pytest.approx(0.5 + 2j * 1e-4 * 150.0)


def test_delta_lambda_real_part_expansion():
    L, t = 150.0, 300.0
    dl = delta_lambda(G, L, t)
    expansion = 0.5 + 4 * 0.01**4 * L * t - 4 * 0.01**4 * t**2 * 0.5
    assert abs(dl.lam.real - expansion) / 0.5 <= EPS**3


def test_delta_lambda_requires_positive_real_part():
    with pytest.raises(ValueError):
        DeltaLambda(-1.0 + 0j, 0.5 + 0j)


def test_closed_form_examples():
    assert closed_form_current(G, 0.0, 0.0) == pytest.approx(math.sqrt(2 / math.pi) * 0.01 * 0.5, rel=1e-14)
    assert closed_form_current(G, 150.0, 300.0) == pytest.approx(3.982e-3, rel=1e-3)
    assert closed_form_current(G, 150.0, 1e9) < 1e-12


def test_closed_form_vectorized():
    ts = np.array([0.0, 100.0, 300.0])
    out = closed_form_current(G, 150.0, ts)
    assert out.shape == (3,)
    assert out[2] == closed_form_current(G, 150.0, 300.0)


def test_lambda_coefficient_values():
    c = lambda_coefficients(G, 150.0)
    assert c.lambda2 == pytest.approx(2e-8, rel=1e-12)
    assert c.lambda0 == pytest.approx(1.6e-3, rel=1e-12)
    assert c.lambda1 == pytest.approx(2 * c.lambda2 * 300.0, rel=1e-12)


def test_lambda_coefficients_need_detector_ahead():
    with pytest.raises(ValueError):
        lambda_coefficients(G, -5.0)


@pytest.mark.parametrize("dp", [0.02, 0.01, 0.005])
def test_lambda_terms_scale_quadratically(dp):
    g = GaussianPacket(0.5, dp)
    L = 3 * g.sigma_x
    t0 = classical_time(0.5, 0.0, L)
    c = lambda_coefficients(g, L)
    eps2 = (dp / 0.5) ** 2
    assert c.lambda0 / eps2 == pytest.approx(4.0)
    assert c.lambda1 * t0 / eps2 == pytest.approx(9.0)
    assert c.lambda2 * t0**2 / eps2 == pytest.approx(4.5)


def test_classical_time():
    assert classical_time(0.5, 0.0, 150.0) == 300.0
    assert classical_time(0.5, -20.0, 3 * G.sigma_x - 20.0) == pytest.approx(300.0)
    assert classical_time(0.5, 7.0, 7.0) == 0.0
    with pytest.raises(ValueError):
        classical_time(0.0, 0.0, 1.0)


def test_second_order_at_classical_time():
    c = lambda_coefficients(G, 150.0)
    factor = 1 + c.lambda0 - c.lambda1 * 300.0 + c.lambda2 * 300.0**2
    assert factor == pytest.approx(1 - 0.5 * EPS**2, rel=1e-14)
    assert jplus_second_order(G, 150.0, 300.0) == pytest.approx(factor * closed_form_current(G, 150.0, 300.0))


def test_second_order_semiclassical_limit():
    g = GaussianPacket(0.5, 1e-6)
    for t in (0.0, 150.0, 300.0, 450.0):
        assert jplus_second_order(g, 150.0, t) == pytest.approx(closed_form_current(g, 150.0, t), rel=1e-10)


def test_second_order_flags_out_of_window():
    w = validity_window(G, 150.0)
    vals, flags = jplus_second_order(G, 150.0, np.array([0.5 * w.t_range[1], 2 * w.t_range[1]]), with_flag=True)
    assert flags.tolist() == [True, False]
    assert np.all(np.isfinite(vals))
    _, flag = jplus_second_order(G, 150.0, 10.0, with_flag=True)
    assert flag is True


def test_bracket_form_agrees_with_simplified():
    w = validity_window(G, 150.0)
    for t in np.linspace(*w.t_range, 9):
        a = jplus_bracket_form(G, 150.0, t)
        b = jplus_second_order(G, 150.0, t)
        assert abs(a / b - 1) <= EPS**3


def test_parabola_vertex():
    assert delta_parabola(G, 150.0, 300.0) == pytest.approx(-2e-4, rel=1e-12)
    ts = np.linspace(0, 600, 601)
    vals = delta_parabola(G, 150.0, ts)
    assert ts[np.argmin(vals)] == 300.0


def test_parabola_zeros_at_thirds():
    L = 3 * G.sigma_x
    t0 = classical_time(0.5, 0.0, L)
    for t in (2 * t0 / 3, 4 * t0 / 3):
        assert abs(delta_parabola(G, L, t)) < 1e-18


@settings(max_examples=30, deadline=None)
@given(p0=st.floats(0.2, 2.0), dp=st.floats(1e-3, 0.03), L=st.floats(10.0, 2000.0))
def test_parabola_zero_on_symmetric_window(p0, dp, L):
    g = GaussianPacket(p0, dp)
    t0 = classical_time(p0, 0.0, L)
    half = g.sigma_x / p0
    for t in (t0 - half, t0 + half):
        assert abs(delta_parabola(g, L, t)) <= 1e-12 * (dp / p0) ** 2


def test_parabola_consistent_with_second_order():
    w = validity_window(G, 150.0)
    for t in np.linspace(*w.t_range, 25):
        lhs = 1 - closed_form_current(G, 150.0, t) / jplus_second_order(G, 150.0, t)
        assert abs(lhs - delta_parabola(G, 150.0, t)) <= EPS**3


@pytest.mark.parametrize("L,rho,sigma", [(150.0, 3.0, 4 / 9), (100.0, 2.0, 1.0), (50.0, 1.0, 2.0)])
def test_validity_window(L, rho, sigma):
    w = validity_window(G, L)
    t0 = classical_time(0.5, 0.0, L)
    assert w.rho == pytest.approx(rho)
    assert w.sigma == pytest.approx(sigma)
    assert w.t_range == pytest.approx((0.0, sigma * t0))
    assert w.contains(0.5 * sigma * t0) and not w.contains(1.01 * sigma * t0)


def test_interference_current_shape():
    s = SuperpositionState.from_momenta(100.0, 4e-3, 1.0, 5e-4)
    assert interference_period(1.0) == pytest.approx(4 * math.pi)
    L = 3 * s.sigma_x
    t = np.linspace(2900.0, 3100.0, 7)
    a = interference_current_leading(s, L, t)
    b = interference_current_leading(s, L, t + interference_period(1.0))
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-20)
    amp = 2 * math.sqrt(2 * math.pi) / (2 * math.pi) * 100.0 * s.alpha**2 * 5e-4 * 1.0
    assert np.max(np.abs(interference_current_leading(s, L, np.linspace(3000, 3013, 2001)))) == pytest.approx(
        amp, rel=1e-6)
