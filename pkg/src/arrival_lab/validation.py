"""Internal oracle checks run by ``arrival-lab validate``.

Each check compares a production path against an independent route and
returns ``(name, passed, detail)``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.integrate import solve_ivp

from .analytic import closed_form_current, delta_lambda, jplus_second_order, validity_window
from .observables import expectation_J, expectation_Jplus, functional_I, transmittance
from .quadrature import QuadratureSpec
from .scattering import ScatteringModel, transmission_amplitude
from .units import HBAR, MASS, GaussianPacket


def gaussian_I1(packet: GaussianPacket, X: float, t: float) -> complex:
    """I[1] for a free Gaussian from the complete-the-square formula."""
    dp, p0 = packet.dp, packet.p_center
    a = 1.0 / (4.0 * dp**2) + 1j * t / (2.0 * MASS * HBAR)
    b = p0 / (2.0 * dp**2) + 1j * (X - packet.x0) / HBAR
    c = -(p0**2) / (4.0 * dp**2)
    norm = (2.0 * math.pi * dp**2) ** -0.25
    return norm * cmath.sqrt(math.pi / a) * cmath.exp(b * b / (4.0 * a) + c)


def stationary_scattering(d: float, p_barrier: float, p: float) -> tuple[complex, complex]:
    """(T, R) by integrating psi'' = (p_B^2 - p^2) psi / hbar^2 backwards across [0, d].

    Starts from the pure transmitted wave exp(ikx) at x = d and decomposes
    the solution at x = 0 into incident and reflected plane waves.
    """
    k = p / HBAR
    q2 = (p_barrier**2 - p**2) / HBAR**2

    def rhs(x, y):
        return [y[1], q2 * y[0]]

    y_d = [cmath.exp(1j * k * d), 1j * k * cmath.exp(1j * k * d)]
    sol = solve_ivp(rhs, (d, 0.0), np.array(y_d, dtype=complex), rtol=1e-12, atol=1e-14, method="DOP853")
    psi, dpsi = sol.y[0, -1], sol.y[1, -1]
    incident = 0.5 * (psi + dpsi / (1j * k))
    reflected = 0.5 * (psi - dpsi / (1j * k))
    return 1.0 / incident, reflected / incident


def run_oracles(quad: QuadratureSpec | None = None) -> list[tuple[str, bool, str]]:
    quad = quad or QuadratureSpec()
    free = ScatteringModel.free()
    g = GaussianPacket(0.5, 0.01, 0.0)
    X = 150.0
    out = []

    ts = np.linspace(0.0, 600.0, 25)
    errs = [abs(expectation_J(g, free, X, t, quad) / closed_form_current(g, X, t) - 1.0) for t in ts]
    out.append(("current vs closed form", max(errs) < 1e-8, f"max rel err {max(errs):.2e}"))

    worst = 0.0
    for X_, t in [(120.0, 80.0), (150.0, 300.0), (200.0, 520.0)]:
        i1, ip, ip2 = functional_I(("1", "p", lambda p: p * p), g, free, X_, t, quad)
        dl = delta_lambda(g, X_, t)
        worst = max(worst, abs(ip / (dl.lam * i1) - 1.0),
                    abs(ip2 / ((dl.lam**2 + 1.0 / (2.0 * dl.delta)) * i1) - 1.0),
                    abs(i1 / gaussian_I1(g, X_, t) - 1.0))
    out.append(("moment identities", worst < 1e-9, f"max rel err {worst:.2e}"))

    norm = transmittance(g, free, quad)
    out.append(("free norm", abs(norm - 1.0) < 1e-9, f"|T-1| = {abs(norm - 1.0):.2e}"))

    worst = 0.0
    for d in (2.0, 8.0):
        for p in (0.3, 0.5, 0.8, 1.1):
            T_ode, R_ode = stationary_scattering(d, 0.8, p)
            T = complex(transmission_amplitude(ScatteringModel.barrier(d, 0.8), p))
            worst = max(worst, abs(T - T_ode) / abs(T_ode), abs(abs(T_ode) ** 2 + abs(R_ode) ** 2 - 1.0))
    out.append(("barrier amplitude vs ODE", worst < 1e-8, f"max err {worst:.2e}"))

    w = validity_window(g, X)
    tw = np.linspace(*w.t_range, 30)
    devs = [abs(jplus_second_order(g, X, t) / expectation_Jplus(g, free, X, t, quad) - 1.0) for t in tw]
    bound = (g.dp / g.p_center) ** 3
    out.append(("second-order <J+> remainder", max(devs) < bound, f"max dev {max(devs):.2e} < {bound:.1e}"))
    return out
