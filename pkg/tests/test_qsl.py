import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qoc.errors import DomainError
from qoc.model import propagate_z
from qoc.protocols import AdmissibilityTarget, ControlProtocol, constant_guess
from qoc.qsl import (
    bures_angle,
    impulse_scaling_exponent,
    impulse_sweep,
    minimal_time_certificate,
    speed_bound_series,
)

LN2 = math.log(2)


class TestBuresAngle:
    @pytest.mark.parametrize("z,expected", [(1.0, 0.0), (0.0, math.pi / 4), (-1.0, math.pi / 2)])
    def test_values(self, z, expected):
        assert bures_angle(z) == pytest.approx(expected, abs=1e-15)

    def test_vectorized(self):
        np.testing.assert_allclose(bures_angle(np.array([1.0, 0.0])), [0.0, math.pi / 4])

    def test_domain(self):
        with pytest.raises(DomainError):
            bures_angle(1.5)

    def test_monotone_along_decay(self, target):
        p = constant_guess(target, 1.0, 200)
        assert np.all(np.diff(bures_angle(propagate_z(p).z)) > 0)

    def test_rate_matches_geometric_side(self):
        # 2 cos(l) sin(l) dl/dt equals -zdot/2; checked with a finite difference in time
        p = ControlProtocol.from_function(lambda t: 0.5 + np.sin(3 * t) ** 2, 1.0, 4000)
        traj = propagate_z(p)
        angle = bures_angle(traj.z)
        dl = np.gradient(angle, p.dt)
        geometric = 2 * np.cos(angle) * np.sin(angle) * dl
        bound = speed_bound_series(p, traj)
        # the angle grows like sqrt(t) at the up state, so stay clear of t = 0
        inner = slice(200, -1)
        np.testing.assert_allclose(geometric[inner], bound.lhs[inner], atol=1e-5)


class TestSpeedBound:
    def test_tight_for_nonnegative_rates(self, make_smooth):
        p = make_smooth(np.random.default_rng(3), floor=0.0)
        bound = speed_bound_series(p, propagate_z(p))
        assert bound.tight.all()
        assert abs(bound.violation) < 1e-12

    def test_strict_where_rate_negative(self):
        p = ControlProtocol.from_function(lambda t: np.cos(4 * t), 1.0, 400)
        bound = speed_bound_series(p, propagate_z(p))
        negative = p.gamma < -1e-9
        assert negative.any()
        assert np.all(bound.lhs[negative] < bound.rhs[negative])
        assert not bound.tight[negative].any()

    def test_zero_rate(self):
        p = ControlProtocol(1.0, np.zeros(11))
        bound = speed_bound_series(p, propagate_z(p))
        assert not bound.lhs.any() and not bound.rhs.any() and bound.tight.all()

    def test_iteration(self):
        p = ControlProtocol(1.0, np.ones(5))
        samples = list(speed_bound_series(p, propagate_z(p)))
        assert len(samples) == 5 and samples[0].t == 0.0 and samples[-1].tight

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_bound_never_violated(self, values):
        gamma = np.interp(np.linspace(0, 1, 101), np.linspace(0, 1, 4), values)
        p = ControlProtocol(1.0, gamma)
        bound = speed_bound_series(p, propagate_z(p))
        assert np.all(bound.lhs <= bound.rhs + 1e-12)


class TestMinimalTime:
    def test_certificate(self):
        cert = minimal_time_certificate()
        assert cert.tau_star == 0.0
        assert cert.impulse_weight == pytest.approx(LN2, abs=1e-15)
        assert cert.costate == "identically zero" and cert.costate_max_abs == 0.0
        assert cert.heaviside_weight == {"t=0-": 2.0, "t=0+": 1.0}
        assert cert.strictly_increasing

    def test_certificate_serializes(self):
        d = minimal_time_certificate(widths=(0.4, 0.2)).to_dict()
        assert d["tau_star"] == 0.0 and len(d["impulse_sweep"]) == 2
        assert d["J_Q_strictly_increasing_as_width_shrinks"]

    def test_general_budget(self):
        cert = minimal_time_certificate(AdmissibilityTarget(0.5, -0.5))
        assert cert.impulse_weight == pytest.approx(math.log(3))

    def test_sweep_scales_inversely(self, target):
        sweep = impulse_sweep(target, 1.0, 4000, (0.4, 0.2, 0.1, 0.05))
        assert impulse_scaling_exponent(sweep) == pytest.approx(-1.0, rel=0.2)
        # continuum value for a flat impulse of width w is 1.5 ln2 / w
        for w, j in sweep:
            assert j == pytest.approx(1.5 * LN2 / w, rel=0.02)

    def test_full_width_is_constant_protocol(self, target):
        (_, j), = impulse_sweep(target, 1.0, 1000, (1.0,))
        assert j == pytest.approx(1.5 * LN2, abs=1e-6)
