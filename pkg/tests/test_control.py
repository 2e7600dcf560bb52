"""Tracking law: projection, length channel, and linearity."""
import math

import numpy as np
import pytest

from grfgov.control import (CartesianReference, TrackingGains,
                            radial_projection, thruster_feedback)
from grfgov.rom import PendulumState


def _state(rng):
    u = rng.uniform(-0.3, 0.3, 3)
    u[2] = 0.0
    c = u + rng.uniform(-0.6, 0.6, 3)
    c[2] = u[2] + rng.uniform(0.2, 1.0)
    return PendulumState(c=c, c_dot=rng.uniform(-1.0, 1.0, 3), u=u,
                         m=5.0, g=9.81)


def test_zero_error_gives_zero_command():
    rng = np.random.default_rng(20)
    gains = TrackingGains(660.0, 60.0, 660.0, 60.0)
    for _ in range(20):
        st = _state(rng)
        cmd = thruster_feedback(st, CartesianReference(st.c, st.c_dot),
                                gains)
        assert np.max(np.abs(cmd.u_tc)) <= 1e-12
        assert abs(cmd.u_r) <= 1e-12


def test_projection_removes_leg_axis_component():
    rng = np.random.default_rng(21)
    gains = TrackingGains(660.0, 60.0, 660.0, 60.0,
                          use_radial_projection=True)
    for _ in range(100):
        st = _state(rng)
        ref = CartesianReference(rng.uniform(-1.0, 1.0, 3),
                                 rng.uniform(-1.0, 1.0, 3))
        cmd = thruster_feedback(st, ref, gains)
        r = st.leg()
        assert abs(float(r @ cmd.u_tc)) <= 1e-9 * max(
            1.0, float(np.linalg.norm(cmd.u_tc)))


def test_projection_off_is_plain_pd():
    rng = np.random.default_rng(22)
    gains = TrackingGains(400.0, 40.0, 0.0, 0.0,
                          use_radial_projection=False,
                          use_length_actuation=False)
    st = _state(rng)
    ref = CartesianReference([0.3, -0.1, 0.7], [0.1, 0.0, -0.2])
    cmd = thruster_feedback(st, ref, gains)
    want = 400.0 * (ref.c_t - st.c) + 40.0 * (ref.c_t_dot - st.c_dot)
    assert np.max(np.abs(cmd.u_tc - want)) <= 1e-12
    assert cmd.u_r == 0.0


def test_length_channel_projects_pd_onto_leg():
    rng = np.random.default_rng(23)
    gains = TrackingGains(660.0, 60.0, 660.0, 60.0)
    for _ in range(50):
        st = _state(rng)
        ref = CartesianReference(rng.uniform(-1.0, 1.0, 3),
                                 rng.uniform(-1.0, 1.0, 3))
        cmd = thruster_feedback(st, ref, gains)
        e = ref.c_t - st.c
        e_dot = ref.c_t_dot - st.c_dot
        want = float(st.leg() @ (660.0 * e + 60.0 * e_dot))
        assert cmd.u_r == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_command_affine_in_reference():
    # equal reference increments produce equal command increments
    rng = np.random.default_rng(24)
    gains = TrackingGains(660.0, 60.0, 660.0, 60.0)
    st = _state(rng)
    base = np.concatenate([st.c + [0.05, 0.0, 0.1], st.c_dot])
    delta = rng.uniform(-0.5, 0.5, 6)

    def cmd_at(vec):
        c = thruster_feedback(st, CartesianReference(vec[:3], vec[3:]),
                              gains)
        return np.concatenate([c.u_tc, [c.u_r]])

    d1 = cmd_at(base + delta) - cmd_at(base)
    d2 = cmd_at(base + 2.0 * delta) - cmd_at(base + delta)
    assert np.max(np.abs(d1 - d2)) <= 1e-9


def test_radial_projection_is_rank_one_projector():
    rng = np.random.default_rng(25)
    st = _state(rng)
    Y = radial_projection(st)
    assert np.max(np.abs(Y @ Y - Y)) <= 1e-12
    assert np.trace(Y) == pytest.approx(1.0, rel=1e-12)
    r = st.leg()
    assert np.max(np.abs(Y @ r - r)) <= 1e-12


def test_gain_validation():
    with pytest.raises(ValueError):
        TrackingGains(-1.0, 60.0, 660.0, 60.0)
    with pytest.raises(ValueError):
        TrackingGains(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        TrackingGains(0.0, 0.0, 660.0, 60.0, use_length_actuation=False)
    # length-only actuation is a valid configuration
    TrackingGains(0.0, 0.0, 660.0, 60.0, use_length_actuation=True)
