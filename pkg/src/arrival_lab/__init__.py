"""Numerical laboratory for quantum arrival-time distributions.

Compares the probability current density with the positive-definite
arrival-time distribution for 1D wave packets, either freely evolving or
transmitted through a rectangular barrier.
"""

from .units import ATOMIC, GaussianPacket, PhysicalConstants, SuperpositionState
from .scattering import ScatteringModel
from .quadrature import NumericalFailure, QuadratureSpec

__all__ = [
    "ATOMIC",
    "GaussianPacket",
    "NumericalFailure",
    "PhysicalConstants",
    "QuadratureSpec",
    "ScatteringModel",
    "SuperpositionState",
]

__version__ = "0.1.0"
