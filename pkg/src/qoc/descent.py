"""Steepest descent restricted to the admissible set.

Each iteration propagates the state, solves the costate, and moves the
control along ``dH/dgamma`` with the gradient's time average removed, which
leaves the trapezoidal integral of gamma unchanged. A step that raises the
cost (or makes it non-finite) is retried with half the step size.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DivergenceError, PreconditionError, StallError
from .model import propagate_z
from .pontryagin import Functional, evaluate_cost, gradient_series
from .protocols import (
    AdmissibilityTarget,
    ControlProtocol,
    admissibility_residual,
    integrate,
)

log = logging.getLogger(__name__)

ADMISSIBLE_TOL = 1e-9


@dataclass(frozen=True)
class DescentConfig:
    epsilon: float = 0.1
    delta: float = 1e-5
    max_iter: int = 1000
    projection: str = "mean-subtract"
    max_halvings: int = 20

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.projection != "mean-subtract":
            raise ConfigurationError(f"unknown projection {self.projection!r}")
        if self.max_halvings < 0:
            raise ConfigurationError("max_halvings must be >= 0")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    cost: float
    residual: float
    epsilon_used: float


@dataclass
class DescentReport:
    kind: Functional
    records: list[IterationRecord]
    final_protocol: ControlProtocol
    converged: bool
    stalled: bool = False
    message: str = ""
    halvings: int = 0
    final_gradient: np.ndarray | None = field(default=None, repr=False)

    @property
    def history(self) -> list[float]:
        return [r.cost for r in self.records]

    @property
    def admissibility_residuals(self) -> list[float]:
        return [r.residual for r in self.records]

    @property
    def iterations(self) -> int:
        """Accepted steps; record 0 is the initial guess."""
        return len(self.records) - 1

    @property
    def final_cost(self) -> float:
        return self.records[-1].cost


def projected_update(
    protocol: ControlProtocol, gradient: np.ndarray, epsilon: float
) -> ControlProtocol:
    """``gamma + epsilon (g - mean(g))`` with the trapezoidal time average of g."""
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != protocol.gamma.shape:
        raise ConfigurationError("gradient and protocol live on different grids")
    mean = integrate(gradient, protocol.dt) / protocol.tau
    return protocol.with_gamma(protocol.gamma + epsilon * (gradient - mean))


def _cost(kind, protocol: ControlProtocol, z0: float) -> float:
    return evaluate_cost(kind, protocol, propagate_z(protocol, z0))


def adaptive_step_fallback(
    kind,
    protocol: ControlProtocol,
    gradient: np.ndarray,
    epsilon: float,
    cost: float,
    target: AdmissibilityTarget = AdmissibilityTarget(),
    max_halvings: int = 20,
) -> tuple[ControlProtocol, float, float, int]:
    """Try ``epsilon``, halving it until the cost does not increase.

    A trial is also rejected when its cost is non-finite or rounding has
    pushed it off the admissible set (huge controls lose the integral's
    digits). Returns ``(protocol, cost, epsilon_used, halvings)``. Raises
    :class:`StallError` when every usable trial raised the cost and
    :class:`DivergenceError` when no trial was usable at all.
    """
    eps = epsilon
    any_usable = False
    for halvings in range(max_halvings + 1):
        if halvings:
            eps /= 2
        trial = projected_update(protocol, gradient, eps)
        with np.errstate(over="ignore", invalid="ignore"):
            trial_cost = _cost(kind, trial, target.z0)
        if not np.isfinite(trial_cost) or admissibility_residual(trial, target) >= ADMISSIBLE_TOL:
            continue
        any_usable = True
        if trial_cost <= cost:
            return trial, trial_cost, eps, halvings
    if not any_usable:
        raise DivergenceError(
            f"no finite admissible step down to epsilon={eps:g}; use a smaller epsilon"
        )
    raise StallError(f"no decrease after {max_halvings} halvings (last epsilon {eps:g})")


def optimize(
    kind,
    initial: ControlProtocol,
    target: AdmissibilityTarget = AdmissibilityTarget(),
    config: DescentConfig = DescentConfig(),
) -> DescentReport:
    """Run the constrained descent from an admissible ``initial`` protocol.

    Stops when two consecutive accepted costs differ by at most
    ``config.delta`` or after ``config.max_iter`` loop passes. Exhausting the
    halvings once continues from the smallest tried step size; exhausting
    them twice in a row ends the run with ``stalled=True``. A
    :class:`DivergenceError` raised mid-run carries the partial report in its
    ``report`` attribute.
    """
    kind = Functional(kind)
    residual = admissibility_residual(initial, target)
    if residual >= ADMISSIBLE_TOL:
        raise PreconditionError(f"initial protocol is not admissible (residual {residual:.3e})")
    with np.errstate(over="ignore", invalid="ignore"):
        cost = _cost(kind, initial, target.z0)
    if not np.isfinite(cost):
        raise DivergenceError("initial cost is non-finite")

    protocol = initial
    eps = config.epsilon
    records = [IterationRecord(0, cost, residual, 0.0)]
    halvings_total = 0
    stalls = 0
    gradient = None

    def report(converged, message, stalled=False):
        return DescentReport(kind, records, protocol, converged, stalled=stalled, message=message,
                             halvings=halvings_total, final_gradient=gradient)

    for n in range(1, config.max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            gradient = gradient_series(kind, protocol, propagate_z(protocol, target.z0))
        if not np.all(np.isfinite(gradient)):
            exc = DivergenceError(f"non-finite gradient at iteration {n}; use a smaller epsilon")
            exc.report = report(False, str(exc))
            raise exc
        mean = integrate(gradient, protocol.dt) / protocol.tau
        if not np.any(gradient - mean):
            return report(True, "zero projected gradient")
        try:
            protocol, new_cost, eps, halvings = adaptive_step_fallback(
                kind, protocol, gradient, eps, cost, target, config.max_halvings
            )
        except StallError as exc:
            halvings_total += config.max_halvings
            log.warning("no decrease at iteration %d: %s", n, exc)
            if stalls:
                return report(False, str(exc), stalled=True)
            # one more round of halvings below the last rejected step size
            stalls += 1
            eps = eps / 2 ** (config.max_halvings + 1)
            continue
        except DivergenceError as exc:
            exc.report = report(False, str(exc))
            raise
        halvings_total += halvings
        stalls = 0
        residual = admissibility_residual(protocol, target)
        records.append(IterationRecord(len(records), new_cost, residual, eps))
        log.debug("iter %d J=%.10g residual=%.2e eps=%g", n, new_cost, residual, eps)
        if abs(new_cost - cost) <= config.delta:
            return report(True, "cost change below delta")
        cost = new_cost
    return report(False, "max_iter reached")


@dataclass(frozen=True)
class ReferenceOptimum:
    """Variational optimum for z: 1 -> 0 sampled on the grid."""

    t: np.ndarray
    gamma: np.ndarray
    z: np.ndarray
    cost: float
    clamped: np.ndarray


def heating_optimum(tau: float = 1.0, n: int = 1000) -> ReferenceOptimum:
    """Linear z, constant heating rate: ``gamma = 1/(2 tau - t)``, ``J = 1/tau``."""
    t = np.linspace(0.0, tau, n + 1)
    return ReferenceOptimum(t, 1 / (2 * tau - t), 1 - t / tau, 1 / tau, np.zeros(t.size, bool))


def dispersion_optimum(tau: float = 1.0, n: int = 1000) -> ReferenceOptimum:
    """``z = sqrt(1 - t/tau)`` with ``J = 1/(4 tau)``.

    The rate ``1/(2 tau s (1 + s))`` with ``s = sqrt(1 - t/tau)`` diverges at
    ``t = tau``; the final node is clamped to its neighbour and flagged.
    """
    t = np.linspace(0.0, tau, n + 1)
    s = np.sqrt(np.clip(1 - t / tau, 0.0, None))
    gamma = np.empty_like(t)
    gamma[:-1] = 1 / (2 * tau * s[:-1] * (1 + s[:-1]))
    gamma[-1] = gamma[-2]
    clamped = np.zeros(t.size, bool)
    clamped[-1] = True
    return ReferenceOptimum(t, gamma, s, 1 / (4 * tau), clamped)
