import numpy as np
import pytest

from qoc.protocols import AdmissibilityTarget, ControlProtocol

_ACCEPTANCE_LINES = []


def smooth_random_protocol(rng, tau=1.0, n=1000, modes=4, scale=1.0, floor=None):
    """Random low-order Fourier control; ``floor`` shifts it to stay >= floor."""
    t = np.linspace(0.0, tau, n + 1)
    gamma = np.full(t.size, rng.uniform(0.2, 1.5) * scale)
    for k in range(1, modes + 1):
        a, b = rng.normal(scale=scale / k, size=2)
        gamma += a * np.cos(2 * np.pi * k * t / tau) + b * np.sin(2 * np.pi * k * t / tau)
    if floor is not None:
        gamma += max(0.0, floor - gamma.min())
    return ControlProtocol(tau, gamma)


@pytest.fixture
def target():
    return AdmissibilityTarget()


@pytest.fixture
def make_smooth():
    return smooth_random_protocol


@pytest.fixture
def criterion():
    """Record a pass/fail line for the acceptance summary, then assert."""

    def check(label, ok, detail):
        _ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        print(_ACCEPTANCE_LINES[-1])
        assert ok, f"{label}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
