"""Control Hamiltonians, costates and control gradients.

Every cost functional is defined once, through its Lagrangian ``L(z, gamma)``
and the two partial derivatives of ``L``. The control Hamiltonian follows the
convention ``H = p f - L`` with the state equation ``f = -gamma (z + 1)``, so

    dH/dz     = -gamma p - dL/dz        (costate:  dp/dt = -dH/dz, p(tau) = 0)
    dH/dgamma = -p (z + 1) - dL/dgamma

The minimal-time problem has no Lagrangian in the control; its Hamiltonian
carries the constant ``-tau`` instead.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .model import Trajectory, z_from_gamma_integral
from .protocols import ControlProtocol, cumulative_integral, integrate


class Functional(str, enum.Enum):
    HEATING = "heating"
    DISPERSION = "dispersion"
    MINIMAL_TIME = "minimal-time"
    QSL = "qsl"


@dataclass(frozen=True)
class CostFunctionalSpec:
    kind: Functional
    lagrangian: Callable
    dl_dz: Callable
    dl_dgamma: Callable


def _zero(z, gamma):
    return np.zeros(np.broadcast(z, gamma).shape) if np.ndim(z) or np.ndim(gamma) else 0.0


SPECS = {
    Functional.HEATING: CostFunctionalSpec(
        Functional.HEATING,
        lagrangian=lambda z, g: g**2 * (z + 1) ** 2,
        dl_dz=lambda z, g: 2 * g**2 * (z + 1),
        dl_dgamma=lambda z, g: 2 * g * (z + 1) ** 2,
    ),
    Functional.DISPERSION: CostFunctionalSpec(
        Functional.DISPERSION,
        lagrangian=lambda z, g: g**2 * (1 + z) ** 2 * z**2,
        dl_dz=lambda z, g: 2 * g**2 * (1 + z) * z * (1 + 2 * z),
        dl_dgamma=lambda z, g: 2 * g * (1 + z) ** 2 * z**2,
    ),
    Functional.MINIMAL_TIME: CostFunctionalSpec(
        Functional.MINIMAL_TIME, lagrangian=_zero, dl_dz=_zero, dl_dgamma=_zero
    ),
    # descending the negated heating cost is ascent on the heating cost
    Functional.QSL: CostFunctionalSpec(
        Functional.QSL,
        lagrangian=lambda z, g: -(g**2) * (z + 1) ** 2,
        dl_dz=lambda z, g: -2 * g**2 * (z + 1),
        dl_dgamma=lambda z, g: -2 * g * (z + 1) ** 2,
    ),
}


def spec_for(kind) -> CostFunctionalSpec:
    return SPECS[Functional(kind)]


@dataclass(frozen=True)
class CostateTrajectory:
    t: np.ndarray
    p: np.ndarray


def control_hamiltonian(kind, z, p, gamma, tau: float | None = None):
    spec = spec_for(kind)
    coupling = -gamma * p * (z + 1)
    if spec.kind is Functional.MINIMAL_TIME:
        if tau is None:
            raise ConfigurationError("the minimal-time Hamiltonian needs tau")
        return coupling - tau
    return coupling - spec.lagrangian(z, gamma)


def costate_rhs(kind, z, p, gamma):
    """``dp/dt = gamma p + dL/dz``."""
    return gamma * p + spec_for(kind).dl_dz(z, gamma)


def control_gradient(kind, z, p, gamma):
    """``dH/dgamma = -p (z + 1) - dL/dgamma``."""
    return -p * (z + 1) - spec_for(kind).dl_dgamma(z, gamma)


def _check_grid(protocol: ControlProtocol, z_traj: Trajectory):
    if z_traj.z.shape != protocol.gamma.shape or not protocol.same_grid(z_traj.t):
        raise ConfigurationError("state trajectory and protocol live on different grids")


def solve_costate(kind, protocol: ControlProtocol, z_traj: Trajectory) -> CostateTrajectory:
    """Integrate the costate backward from ``p(tau) = 0`` with classical RK4.

    Between nodes gamma is linear and z is taken from the exact exponential
    solution for that linear gamma, not interpolated from the samples.
    """
    _check_grid(protocol, z_traj)
    spec = spec_for(kind)
    gamma, z, dt = protocol.gamma, z_traj.z, protocol.dt
    big_gamma, _ = cumulative_integral(protocol)
    g_mid = (gamma[:-1] + gamma[1:]) / 2
    z_mid = z_from_gamma_integral(_midpoint_integral(protocol, big_gamma), z_traj.z0)

    # dp/dt = a p + b at the three RK4 abscissae of each backward step
    a1, b1 = gamma[1:], spec.dl_dz(z[1:], gamma[1:])
    am, bm = g_mid, spec.dl_dz(z_mid, g_mid)
    a0, b0 = gamma[:-1], spec.dl_dz(z[:-1], gamma[:-1])
    b1, bm, b0 = (np.broadcast_to(b, gamma[1:].shape) for b in (b1, bm, b0))

    h = -dt
    p = np.zeros_like(gamma)
    pk = 0.0
    for k in range(protocol.n - 1, -1, -1):
        k1 = a1[k] * pk + b1[k]
        k2 = am[k] * (pk + h / 2 * k1) + bm[k]
        k3 = am[k] * (pk + h / 2 * k2) + bm[k]
        k4 = a0[k] * (pk + h * k3) + b0[k]
        pk = pk + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        p[k] = pk
    return CostateTrajectory(protocol.t, p)


def _midpoint_integral(protocol: ControlProtocol, big_gamma: np.ndarray) -> np.ndarray:
    """Gamma at interval midpoints for gamma linear between nodes."""
    g = protocol.gamma
    return big_gamma[:-1] + protocol.dt * (3 * g[:-1] + g[1:]) / 8


def costate_closed_form_heating(protocol: ControlProtocol, z0: float = 1.0) -> CostateTrajectory:
    """Heating costate from its integrating-factor solution.

    ``p_t = -2 (1 + z0) exp(Gamma_t) * int_t^tau gamma_s^2 exp(-2 Gamma_s) ds``;
    for ``z0 = 1`` the prefactor is the familiar -4. The tail integral uses
    Simpson's rule on every grid interval of the piecewise-linear control, so
    it resolves the same continuous problem as the RK4 costate to O(dt^4).
    """
    big_gamma, _ = cumulative_integral(protocol)
    g = protocol.gamma
    f = g**2 * np.exp(-2 * big_gamma)
    f_mid = ((g[:-1] + g[1:]) / 2) ** 2 * np.exp(-2 * _midpoint_integral(protocol, big_gamma))
    pieces = protocol.dt / 6 * (f[:-1] + 4 * f_mid + f[1:])
    tail = np.zeros_like(g)
    tail[:-1] = np.cumsum(pieces[::-1])[::-1]
    return CostateTrajectory(protocol.t, -2 * (1 + z0) * np.exp(big_gamma) * tail)


def lagrangian_series(kind, protocol: ControlProtocol, z_traj: Trajectory) -> np.ndarray:
    _check_grid(protocol, z_traj)
    return np.broadcast_to(spec_for(kind).lagrangian(z_traj.z, protocol.gamma), protocol.gamma.shape)


def evaluate_cost(kind, protocol: ControlProtocol, z_traj: Trajectory) -> float:
    if Functional(kind) is Functional.MINIMAL_TIME:
        return protocol.tau
    return integrate(lagrangian_series(kind, protocol, z_traj), protocol.dt)


def gradient_series(kind, protocol: ControlProtocol, z_traj: Trajectory) -> np.ndarray:
    """Pointwise ``dH/dgamma`` along a trajectory, using the kind's own costate."""
    costate = solve_costate(kind, protocol, z_traj)
    return control_gradient(kind, z_traj.z, costate.p, protocol.gamma)
