"""Quantum speed limit diagnostics for trajectories starting in the up state."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .model import NORM_TOL, Trajectory, propagate_z, z_rate
from .pontryagin import Functional, evaluate_cost, solve_costate
from .protocols import AdmissibilityTarget, ControlProtocol, constant_guess, impulse_protocol

DEFAULT_WIDTHS = (0.4, 0.2, 0.1, 0.05)


def bures_angle(z):
    """Angle between the up state and a state with longitudinal component ``z``."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1 + NORM_TOL):
        raise DomainError("|z| must not exceed 1")
    angle = np.arccos(np.sqrt(np.clip((1 + z) / 2, 0.0, 1.0)))
    return float(angle) if angle.ndim == 0 else angle


@dataclass(frozen=True)
class SpeedBoundSample:
    t: float
    lhs: float
    rhs: float
    tight: bool


@dataclass(frozen=True)
class SpeedBoundSeries:
    t: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    tight: np.ndarray

    def __len__(self):
        return self.t.size

    def __iter__(self):
        for args in zip(self.t, self.lhs, self.rhs, self.tight):
            yield SpeedBoundSample(float(args[0]), float(args[1]), float(args[2]), bool(args[3]))

    @property
    def violation(self) -> float:
        """Largest amount by which the geometric side exceeds the norm side."""
        return float(np.max(self.lhs - self.rhs))


def speed_bound_series(
    protocol: ControlProtocol, z_traj: Trajectory, tol: float = 1e-12
) -> SpeedBoundSeries:
    """Both sides of ``2 cos(l) sin(l) dl/dt <= ||drho/dt||_op`` along a trajectory.

    For states on the z axis these reduce to ``-zdot/2`` and ``|zdot|/2``.
    """
    zdot = z_rate(protocol.gamma, z_traj.z)
    lhs = -zdot / 2
    rhs = np.abs(zdot) / 2
    return SpeedBoundSeries(protocol.t, lhs, rhs, np.abs(rhs - lhs) < tol)


@dataclass(frozen=True)
class MinimalTimeCertificate:
    tau_star: float
    impulse_weight: float
    costate: str
    heating: str
    # weight multiplying the impulse in the optimal heating rate on either side of t = 0
    heaviside_weight: dict = field(default_factory=lambda: {"t=0-": 2.0, "t=0+": 1.0})
    costate_max_abs: float = 0.0
    widths: tuple = ()
    costs: tuple = ()

    @property
    def strictly_increasing(self) -> bool:
        """True when the heating cost grows at every narrowing of the impulse."""
        order = np.argsort(self.widths)[::-1]
        costs = np.asarray(self.costs)[order]
        return bool(np.all(np.diff(costs) > 0))

    def to_dict(self) -> dict:
        return {
            "tau_star": self.tau_star,
            "impulse_weight": self.impulse_weight,
            "costate": self.costate,
            "heating": self.heating,
            "heaviside_weight": dict(self.heaviside_weight),
            "costate_max_abs": self.costate_max_abs,
            "impulse_sweep": [{"width": w, "J_Q": j} for w, j in zip(self.widths, self.costs)],
            "J_Q_strictly_increasing_as_width_shrinks": self.strictly_increasing,
        }


def impulse_sweep(
    target: AdmissibilityTarget, tau: float = 1.0, n: int = 1000, widths=DEFAULT_WIDTHS
) -> list[tuple[float, float]]:
    out = []
    for w in widths:
        protocol = impulse_protocol(target, tau, n, w)
        out.append((float(w), evaluate_cost(Functional.HEATING, protocol, propagate_z(protocol, target.z0))))
    return out


def impulse_scaling_exponent(sweep) -> float:
    """Least-squares slope of log J_Q against log width; -1 means J_Q ~ 1/width."""
    w, j = np.array(sweep).T
    return float(np.polyfit(np.log(w), np.log(j), 1)[0])


def minimal_time_certificate(
    target: AdmissibilityTarget = AdmissibilityTarget(),
    tau: float = 1.0,
    n: int = 1000,
    widths=DEFAULT_WIDTHS,
) -> MinimalTimeCertificate:
    """Analytic minimal-time result plus a numerical look at the impulse limit.

    The costate of the minimal-time problem vanishes identically, so the
    Hamiltonian equals ``-tau`` and is maximal at ``tau = 0``: the whole
    budget is delivered as an impulse at t = 0. Finite-width impulses show
    the heating cost growing without bound as the width shrinks.
    """
    reference = constant_guess(target, tau, n)
    costate = solve_costate(Functional.MINIMAL_TIME, reference, propagate_z(reference, target.z0))
    sweep = impulse_sweep(target, tau, n, widths)
    return MinimalTimeCertificate(
        tau_star=0.0,
        impulse_weight=target.budget,
        costate="identically zero",
        heating="unbounded impulse",
        costate_max_abs=float(np.max(np.abs(costate.p))),
        widths=tuple(w for w, _ in sweep),
        costs=tuple(j for _, j in sweep),
    )
