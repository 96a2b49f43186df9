"""Control protocols on a uniform time grid.

A protocol holds the decay rate ``gamma`` (and optionally the Lamb shift
``lam``) sampled at the ``n + 1`` nodes of ``[0, tau]``. All integrals over
the grid use the trapezoidal rule so that admissibility is a discrete
equality the optimizer can conserve to rounding error.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigurationError, ResolutionError

UNIFORMITY_RTOL = 1e-9


@dataclass(frozen=True)
class ControlProtocol:
    tau: float
    gamma: np.ndarray
    lam: np.ndarray | None = field(default=None)

    def __post_init__(self):
        gamma = np.array(self.gamma, dtype=float)
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        if gamma.ndim != 1 or gamma.size < 3:
            raise ConfigurationError("gamma needs at least 3 nodes (n >= 2)")
        if not np.all(np.isfinite(gamma)):
            raise ConfigurationError("gamma must be finite at every node")
        lam = np.zeros_like(gamma) if self.lam is None else np.array(self.lam, dtype=float)
        if lam.shape != gamma.shape:
            raise ConfigurationError("lambda and gamma must share the grid")
        if not np.all(np.isfinite(lam)):
            raise ConfigurationError("lambda must be finite at every node")
        gamma.flags.writeable = False
        lam.flags.writeable = False
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def from_function(cls, func, tau: float, n: int, lam_func=None) -> "ControlProtocol":
        t = np.linspace(0.0, tau, n + 1)
        gamma = np.broadcast_to(np.asarray(func(t), dtype=float), t.shape)
        lam = None
        if lam_func is not None:
            lam = np.broadcast_to(np.asarray(lam_func(t), dtype=float), t.shape)
        return cls(tau, gamma, lam)

    @property
    def n(self) -> int:
        return self.gamma.size - 1

    @property
    def dt(self) -> float:
        return self.tau / self.n

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.tau, self.n + 1)

    def with_gamma(self, gamma: np.ndarray) -> "ControlProtocol":
        return ControlProtocol(self.tau, gamma, self.lam)

    def same_grid(self, t: np.ndarray) -> bool:
        return t.shape == self.gamma.shape and np.allclose(t, self.t, rtol=0, atol=1e-12 * self.tau)


@dataclass(frozen=True)
class AdmissibilityTarget:
    """Endpoints of the process; ``budget`` is the integral of gamma they force."""

    z0: float = 1.0
    z_tau: float = 0.0

    def __post_init__(self):
        if not (-1.0 < self.z_tau <= self.z0 <= 1.0):
            raise ConfigurationError(
                f"need -1 < z_tau <= z0 <= 1, got z0={self.z0}, z_tau={self.z_tau}"
            )

    @property
    def budget(self) -> float:
        return float(np.log((1.0 + self.z0) / (1.0 + self.z_tau)))


class Admissibility(NamedTuple):
    admissible: bool
    residual: float
    negative_samples: int


def trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n + 1, dt)
    w[0] = w[-1] = dt / 2
    return w


def integrate(values: np.ndarray, dt: float) -> float:
    return float(np.trapezoid(values, dx=dt))


def cumulative_integral(protocol: ControlProtocol) -> tuple[np.ndarray, np.ndarray]:
    """Return the running integrals (Gamma_t, Lambda_t), both zero at t = 0."""
    big_gamma = cumulative_trapezoid(protocol.gamma, dx=protocol.dt, initial=0.0)
    big_lam = cumulative_trapezoid(protocol.lam, dx=protocol.dt, initial=0.0)
    return big_gamma, big_lam


def admissibility_residual(protocol: ControlProtocol, target: AdmissibilityTarget) -> float:
    big_gamma, _ = cumulative_integral(protocol)
    return abs(float(big_gamma[-1]) - target.budget)


def is_admissible(
    protocol: ControlProtocol, target: AdmissibilityTarget, tol: float = 1e-9
) -> Admissibility:
    """Check the discrete integral constraint. Negative rates are allowed but counted."""
    residual = admissibility_residual(protocol, target)
    negatives = int(np.count_nonzero(protocol.gamma < 0))
    return Admissibility(residual < tol, residual, negatives)


def constant_guess(target: AdmissibilityTarget, tau: float, n: int) -> ControlProtocol:
    return ControlProtocol(tau, np.full(n + 1, target.budget / tau))


def impulse_protocol(
    target: AdmissibilityTarget, tau: float, n: int, width: float
) -> ControlProtocol:
    """Finite-width stand-in for an impulse at t = 0 carrying the whole budget.

    The rate is constant on the nodes with ``t < width`` and zero afterwards;
    its height is chosen so the trapezoidal integral equals the budget exactly.
    ``width >= tau`` degenerates to :func:`constant_guess`.
    """
    dt = tau / n
    if width <= 0:
        raise ConfigurationError(f"width must be positive, got {width}")
    if width < 2 * dt:
        raise ResolutionError(f"width {width} is below two grid steps ({2 * dt})")
    if width >= tau * (1 - 1e-12):
        return constant_guess(target, tau, n)
    t = np.linspace(0.0, tau, n + 1)
    on = t < width - 1e-12 * tau
    m = int(np.count_nonzero(on))
    # m - 1 full intervals plus the half interval ramping down to zero
    height = target.budget / (dt * (m - 0.5))
    return ControlProtocol(tau, np.where(on, height, 0.0))


def write_protocol_csv(protocol: ControlProtocol, path: str | Path, with_lambda: bool | None = None):
    if with_lambda is None:
        with_lambda = bool(np.any(protocol.lam != 0))
    header = ["t", "gamma", "lambda"] if with_lambda else ["t", "gamma"]
    columns = [protocol.t, protocol.gamma] + ([protocol.lam] if with_lambda else [])
    write_columns(path, header, columns)


def write_columns(path: str | Path, header: list[str], columns: list[np.ndarray]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([format_value(v) for v in row])


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def read_protocol_csv(path: str | Path) -> ControlProtocol:
    """Read a ``t,gamma[,lambda]`` file. Row numbers in errors count the header as row 1."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigurationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header not in (["t", "gamma"], ["t", "gamma", "lambda"]):
        raise ConfigurationError(f"{path}: row 1: expected header 't,gamma[,lambda]', got {rows[0]}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ConfigurationError(f"{path}: row {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            values = [float(cell) for cell in row]
        except ValueError:
            raise ConfigurationError(f"{path}: row {lineno}: non-numeric value in {row}") from None
        if not all(np.isfinite(values)):
            raise ConfigurationError(f"{path}: row {lineno}: non-finite value in {row}")
        data.append(values)
    if len(data) < 3:
        raise ConfigurationError(f"{path}: need at least 3 data rows, got {len(data)}")
    arr = np.array(data)
    t = arr[:, 0]
    if t[0] != 0.0:
        raise ConfigurationError(f"{path}: row 2: grid must start at t = 0, got {t[0]}")
    steps = np.diff(t)
    h = t[-1] / (t.size - 1)
    bad = np.flatnonzero(np.abs(steps - h) > UNIFORMITY_RTOL * h)
    if h <= 0 or bad.size:
        row = int(bad[0]) + 3 if bad.size else 3
        raise ConfigurationError(f"{path}: row {row}: grid is not uniform")
    lam = arr[:, 2] if arr.shape[1] == 3 else None
    return ControlProtocol(float(t[-1]), arr[:, 1], lam)
