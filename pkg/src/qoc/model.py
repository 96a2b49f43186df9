"""Bloch-vector dynamics of a qubit decaying into a leaky cavity mode.

The longitudinal component obeys ``dz/dt = -gamma (z + 1)`` and is solved in
closed form from the running integral of gamma. The transverse components
rotate at ``omega0 + lambda/2`` while shrinking by ``exp(-Gamma/2)``. A fixed
step RK4 integrator of the full three-component system is kept as an
independent cross-check of the closed forms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, SingularityError
from .protocols import ControlProtocol, cumulative_integral

NORM_TOL = 1e-9


@dataclass(frozen=True)
class PhysicsParams:
    omega0: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ConfigurationError(f"omega0 must be positive, got {self.omega0}")
        if not self.hbar > 0:
            raise ConfigurationError(f"hbar must be positive, got {self.hbar}")

    @property
    def level_spacing(self) -> float:
        return self.hbar * self.omega0


@dataclass(frozen=True)
class BlochState:
    x: float = 0.0
    y: float = 0.0
    z: float = 1.0

    def __post_init__(self):
        if self.radius > 1 + NORM_TOL:
            raise DomainError(f"Bloch vector outside the unit ball: |r| = {self.radius}")

    @property
    def radius(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    @property
    def is_pure(self) -> bool:
        return abs(self.radius - 1) <= NORM_TOL


@dataclass(frozen=True)
class Trajectory:
    """Time series of the Bloch vector. ``x`` and ``y`` are None for z-only runs."""

    protocol: ControlProtocol
    z: np.ndarray
    x: np.ndarray | None = None
    y: np.ndarray | None = None

    @property
    def t(self) -> np.ndarray:
        return self.protocol.t

    @property
    def z0(self) -> float:
        return float(self.z[0])

    def __len__(self):
        return self.z.size

    def state(self, k: int) -> BlochState:
        x = 0.0 if self.x is None else float(self.x[k])
        y = 0.0 if self.y is None else float(self.y[k])
        return BlochState(x, y, float(self.z[k]))

    def radius(self) -> np.ndarray:
        r2 = self.z**2
        if self.x is not None:
            r2 = r2 + self.x**2 + self.y**2
        return np.sqrt(r2)


def z_from_gamma_integral(big_gamma, z0: float):
    """z at running integral ``big_gamma`` of the decay rate, starting from ``z0``."""
    decay = np.exp(-np.asarray(big_gamma))
    return z0 * decay + (decay - 1.0)


def propagate_z(protocol: ControlProtocol, z0: float = 1.0) -> Trajectory:
    if abs(z0) > 1 + NORM_TOL:
        raise DomainError(f"|z0| must not exceed 1, got {z0}")
    big_gamma, _ = cumulative_integral(protocol)
    return Trajectory(protocol, z_from_gamma_integral(big_gamma, z0))


def bloch_closed_form(protocol: ControlProtocol, s0: BlochState, params: PhysicsParams) -> Trajectory:
    """Exact solution: ``(x + iy)_t = exp(-Gamma/2) exp(i(omega0 t + Lambda/2)) (x + iy)_0``."""
    big_gamma, big_lam = cumulative_integral(protocol)
    phase = params.omega0 * protocol.t + big_lam / 2
    w = np.exp(-big_gamma / 2 + 1j * phase) * complex(s0.x, s0.y)
    return Trajectory(protocol, z_from_gamma_integral(big_gamma, s0.z), w.real, w.imag)


def _bloch_rhs(state, gamma, lam, omega0):
    x, y, z = state
    rot = omega0 + lam / 2
    return np.array([-gamma / 2 * x - rot * y, rot * x - gamma / 2 * y, -gamma * (z + 1)])


def propagate_bloch(
    protocol: ControlProtocol,
    s0: BlochState,
    params: PhysicsParams = PhysicsParams(),
    substeps: int = 1,
) -> Trajectory:
    """RK4 integration of the three Bloch equations, controls linear between nodes."""
    if substeps < 1:
        raise ConfigurationError("substeps must be >= 1")
    gamma, lam = protocol.gamma, protocol.lam
    h = protocol.dt / substeps
    out = np.empty((protocol.n + 1, 3))
    s = np.array([s0.x, s0.y, s0.z], dtype=float)
    out[0] = s
    for k in range(protocol.n):
        for j in range(substeps):
            a0, a1 = j / substeps, (j + 1) / substeps
            am = (a0 + a1) / 2
            g0, gm, g1 = (gamma[k] + a * (gamma[k + 1] - gamma[k]) for a in (a0, am, a1))
            l0, lm, l1 = (lam[k] + a * (lam[k + 1] - lam[k]) for a in (a0, am, a1))
            k1 = _bloch_rhs(s, g0, l0, params.omega0)
            k2 = _bloch_rhs(s + h / 2 * k1, gm, lm, params.omega0)
            k3 = _bloch_rhs(s + h / 2 * k2, gm, lm, params.omega0)
            k4 = _bloch_rhs(s + h * k3, g1, l1, params.omega0)
            s = s + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = s
    return Trajectory(protocol, out[:, 2], out[:, 0], out[:, 1])


def z_rate(gamma, z):
    """Right-hand side of the longitudinal equation, ``-gamma (z + 1)``."""
    return -np.asarray(gamma) * (np.asarray(z) + 1.0)


def heating_rate(traj: Trajectory, params: PhysicsParams = PhysicsParams()) -> np.ndarray:
    """Power exchanged with the cavity, ``(hbar omega0 / 2) dz/dt``, evaluated pointwise."""
    if len(traj) < 2:
        raise ConfigurationError("trajectory needs at least 2 samples")
    return params.level_spacing / 2 * z_rate(traj.protocol.gamma, traj.z)


def energy_variance(z, params: PhysicsParams = PhysicsParams()):
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1 + NORM_TOL):
        raise DomainError("|z| must not exceed 1")
    value = params.level_spacing**2 / 4 * np.clip(1 - z**2, 0.0, None)
    return float(value) if value.ndim == 0 else value


def entropy_from_radius(r):
    """Von Neumann entropy in nats of a qubit with Bloch radius ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r > 1 + NORM_TOL) or np.any(r < 0):
        raise DomainError("Bloch radius must lie in [0, 1]")
    r = np.clip(r, 0.0, 1.0)
    lp, lm = (1 + r) / 2, (1 - r) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -np.where(lp > 0, lp * np.log(lp), 0.0) - np.where(lm > 0, lm * np.log(lm), 0.0)
    s = s + 0.0  # no negative zero
    return float(s) if s.ndim == 0 else s


def von_neumann_entropy(state: BlochState) -> float:
    return entropy_from_radius(state.radius)


@dataclass(frozen=True)
class CavityAmplitudeSeries:
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        c = np.asarray(self.values, dtype=complex)
        if t.shape != c.shape or t.ndim != 1 or t.size < 3:
            raise ConfigurationError("need matching t and c with at least 3 samples")
        if np.any(np.diff(t) <= 0):
            raise ConfigurationError("time samples must be strictly increasing")
        zeros = np.flatnonzero(c == 0)
        if zeros.size:
            k = int(zeros[0])
            raise SingularityError(f"cavity amplitude vanishes at sample {k} (t = {t[k]})")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", c)


def rates_from_amplitude(series: CavityAmplitudeSeries) -> tuple[np.ndarray, np.ndarray]:
    """Decay rate and Lamb shift from a sampled cavity amplitude.

    ``gamma = -2 Re(c'/c)`` and ``lambda = -2 Im(c'/c)``; the derivative uses
    central differences inside the grid and one-sided ones at the ends.
    """
    ratio = np.gradient(series.values, series.t, edge_order=1) / series.values
    return -2 * ratio.real, -2 * ratio.imag
