"""Optimal control of a qubit decaying into a leaky cavity.

Protocols for the decay rate are optimized by steepest descent on the
control Hamiltonian, restricted to controls that carry the qubit from the
up state to the maximally mixed state in a fixed time.
"""
__version__ = "0.1.0"

from .descent import DescentConfig, DescentReport, optimize, projected_update
from .errors import QOCError
from .model import BlochState, PhysicsParams, Trajectory, propagate_bloch, propagate_z
from .pontryagin import Functional, evaluate_cost, solve_costate
from .protocols import AdmissibilityTarget, ControlProtocol, constant_guess, is_admissible

__all__ = [
    "AdmissibilityTarget",
    "BlochState",
    "ControlProtocol",
    "DescentConfig",
    "DescentReport",
    "Functional",
    "PhysicsParams",
    "QOCError",
    "Trajectory",
    "constant_guess",
    "evaluate_cost",
    "is_admissible",
    "optimize",
    "projected_update",
    "propagate_bloch",
    "propagate_z",
    "solve_costate",
]
