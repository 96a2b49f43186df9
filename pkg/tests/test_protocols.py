import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qoc.errors import ConfigurationError, ResolutionError
from qoc.model import propagate_z
from qoc.pontryagin import Functional, evaluate_cost
from qoc.protocols import (
    AdmissibilityTarget,
    ControlProtocol,
    constant_guess,
    cumulative_integral,
    impulse_protocol,
    is_admissible,
    read_protocol_csv,
    trapezoid_weights,
    write_protocol_csv,
)

LN2 = math.log(2)


def test_protocol_validation():
    with pytest.raises(ConfigurationError):
        ControlProtocol(0.0, np.ones(10))
    with pytest.raises(ConfigurationError):
        ControlProtocol(1.0, np.ones(2))
    with pytest.raises(ConfigurationError):
        ControlProtocol(1.0, [1.0, np.nan, 1.0])
    with pytest.raises(ConfigurationError):
        ControlProtocol(1.0, np.ones(5), np.ones(4))


def test_protocol_is_immutable():
    p = ControlProtocol(1.0, np.ones(5))
    with pytest.raises(ValueError):
        p.gamma[0] = 3.0


def test_target_budget():
    assert AdmissibilityTarget().budget == pytest.approx(LN2, abs=1e-15)
    assert AdmissibilityTarget(1.0, 1.0).budget == 0.0
    with pytest.raises(ConfigurationError):
        AdmissibilityTarget(0.0, 0.5)
    with pytest.raises(ConfigurationError):
        AdmissibilityTarget(1.0, -1.0)


def test_cumulative_integral_constant_is_exact():
    p = ControlProtocol(2.0, np.full(201, 0.7))
    big_gamma, big_lam = cumulative_integral(p)
    assert big_gamma[0] == 0.0
    np.testing.assert_allclose(big_gamma, 0.7 * p.t, rtol=0, atol=1e-14)
    assert not big_lam.any()


def test_cumulative_integral_of_t():
    p = ControlProtocol.from_function(lambda t: t, 1.0, 1000)
    assert cumulative_integral(p)[0][-1] == pytest.approx(0.5, abs=1e-6)


def test_cumulative_integral_of_optimal_heating_rate():
    p = ControlProtocol.from_function(lambda t: 1 / (2 - t), 1.0, 1000)
    assert cumulative_integral(p)[0][-1] == pytest.approx(LN2, abs=1e-5)


@settings(max_examples=50, deadline=None)
@given(
    arrays(float, 41, elements=st.floats(-5, 5)),
    arrays(float, 41, elements=st.floats(-5, 5)),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_cumulative_integral_is_linear(g1, g2, a, b):
    p1, p2 = ControlProtocol(1.3, g1), ControlProtocol(1.3, g2)
    mix = ControlProtocol(1.3, a * g1 + b * g2)
    expected = a * cumulative_integral(p1)[0] + b * cumulative_integral(p2)[0]
    np.testing.assert_allclose(cumulative_integral(mix)[0], expected, rtol=0, atol=1e-12)


def test_trapezoid_weights_sum_to_tau():
    w = trapezoid_weights(10, 0.3)
    assert w.sum() == pytest.approx(3.0)
    assert w[0] == w[-1] == pytest.approx(0.15)


def test_is_admissible_examples(target):
    ok = is_admissible(constant_guess(target, 1.0, 100), target, 1e-12)
    assert ok.admissible and ok.residual < 1e-12
    bad = is_admissible(ControlProtocol(1.0, np.ones(101)), target, 1e-6)
    assert not bad.admissible
    assert bad.residual == pytest.approx(1 - LN2, abs=1e-12)
    zero = is_admissible(ControlProtocol(1.0, np.zeros(101)), target, 1e-6)
    assert zero.residual == pytest.approx(LN2)


def test_is_admissible_counts_negative_rates(target):
    gamma = np.full(101, 2 * LN2)
    gamma[50:] = 0.0
    gamma[60:70] = -0.1
    check = is_admissible(ControlProtocol(1.0, gamma), target)
    assert check.negative_samples == 10


def test_constant_guess_values(target):
    assert constant_guess(target, 1.0, 10).gamma[0] == pytest.approx(0.6931, abs=1e-4)
    assert constant_guess(target, 2.0, 10).gamma[0] == pytest.approx(0.3466, abs=1e-4)
    assert not constant_guess(AdmissibilityTarget(0.5, 0.5), 1.0, 10).gamma.any()


@pytest.mark.parametrize("tau,n", [(1.0, 10), (0.3, 999), (7.0, 1000)])
def test_constant_guess_admissible(target, tau, n):
    assert is_admissible(constant_guess(target, tau, n), target, 1e-12).admissible


@pytest.mark.parametrize("width", [0.05, 0.1, 0.2, 0.4, 0.5, 0.013])
def test_impulse_protocol_admissible(target, width):
    p = impulse_protocol(target, 1.0, 1000, width)
    assert is_admissible(p, target, 1e-12).admissible
    assert propagate_z(p).z[-1] == pytest.approx(0.0, abs=1e-9)


def test_impulse_full_width_is_constant(target):
    p = impulse_protocol(target, 1.0, 100, 1.0)
    np.testing.assert_array_equal(p.gamma, constant_guess(target, 1.0, 100).gamma)


def test_impulse_resolution_error(target):
    with pytest.raises(ResolutionError):
        impulse_protocol(target, 1.0, 100, 0.015)


def test_impulse_heating_cost_scales_inverse_width(target):
    # continuum value for a box of width w carrying ln2: 1.5 ln2 / w
    costs = {}
    for w in (0.4, 0.2, 0.1):
        p = impulse_protocol(target, 1.0, 1000, w)
        costs[w] = evaluate_cost(Functional.HEATING, p, propagate_z(p))
        assert costs[w] == pytest.approx(1.5 * LN2 / w, rel=0.02)
    constant = constant_guess(target, 1.0, 1000)
    base = evaluate_cost(Functional.HEATING, constant, propagate_z(constant))
    assert 9 < costs[0.1] / base < 11
    assert costs[0.2] / costs[0.4] == pytest.approx(2, rel=0.05)
    assert costs[0.1] / costs[0.2] == pytest.approx(2, rel=0.05)


def test_endpoint_identity(target):
    for z_tau in (0.0, -0.5, 0.7):
        tg = AdmissibilityTarget(1.0, z_tau)
        p = constant_guess(tg, 1.0, 500)
        assert propagate_z(p, tg.z0).z[-1] == pytest.approx(z_tau, abs=1e-12)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    p = ControlProtocol(1.7, rng.normal(size=301), rng.normal(size=301))
    write_protocol_csv(p, tmp_path / "p.csv")
    q = read_protocol_csv(tmp_path / "p.csv")
    assert q.tau == p.tau
    np.testing.assert_array_equal(q.gamma, p.gamma)
    np.testing.assert_array_equal(q.lam, p.lam)
    text = (tmp_path / "p.csv").read_bytes()
    assert text.startswith(b"t,gamma,lambda\n") and b"\r" not in text


@pytest.mark.parametrize(
    "content,message",
    [
        ("", "empty"),
        ("time,gamma\n0,1\n0.5,1\n1,1\n", "row 1"),
        ("t,gamma\n0,1\n0.5,x\n1,1\n", "row 3"),
        ("t,gamma\n0,1\n0.4,1\n1,1\n", "not uniform"),
        ("t,gamma\n0,1\n0.5\n1,1\n", "row 3"),
        ("t,gamma\n0.1,1\n0.5,1\n1,1\n", "start"),
        ("t,gamma\n0,1\n1,1\n", "at least 3"),
    ],
)
def test_csv_reader_rejects(tmp_path, content, message):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    with pytest.raises(ConfigurationError, match=message):
        read_protocol_csv(path)
