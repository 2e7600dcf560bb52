"""Thruster and leg-length tracking controller for the VLIP model.

PD feedback on the mass position runs through two channels: a thruster
force on the mass (optionally projected off the leg axis so it cannot
load the leg) and a leg-length acceleration input that serves the radial
direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rom import PendulumState, ThrusterCommand, _vec3


@dataclass
class TrackingGains:
    """PD gains; kp_t/kd_t feed the thruster, kp_r/kd_r the leg length.

    use_radial_projection removes the leg-axis component of the thruster
    force.  use_length_actuation enables the leg-length channel.
    """

    kp_t: float
    kd_t: float
    kp_r: float
    kd_r: float
    use_radial_projection: bool = True
    use_length_actuation: bool = True

    def __post_init__(self):
        for name in ("kp_t", "kd_t", "kp_r", "kd_r"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and nonnegative")
            setattr(self, name, v)
        thruster_live = self.kp_t > 0.0 or self.kd_t > 0.0
        length_live = self.use_length_actuation and (self.kp_r > 0.0
                                                     or self.kd_r > 0.0)
        if not (thruster_live or length_live):
            raise ValueError("no live actuation channel")


@dataclass
class CartesianReference:
    """Target mass position and velocity."""

    c_t: np.ndarray
    c_t_dot: np.ndarray = None

    def __post_init__(self):
        self.c_t = _vec3(self.c_t)
        self.c_t_dot = np.zeros(3) if self.c_t_dot is None \
            else _vec3(self.c_t_dot)


def radial_projection(state: PendulumState) -> np.ndarray:
    """Rank-1 projector Y onto the leg axis: Y = j j^T, j = leg direction.

    The thruster law applies (I - Y) so its force cannot load the leg.
    """
    r = state.leg()
    return np.outer(r, r) / float(r @ r)


def thruster_feedback(state: PendulumState, ref: CartesianReference,
                      gains: TrackingGains) -> ThrusterCommand:
    """PD tracking command toward ref, using the state's leg geometry."""
    e = ref.c_t - state.c
    e_dot = ref.c_t_dot - state.c_dot
    w = gains.kp_t * e + gains.kd_t * e_dot
    if gains.use_radial_projection:
        u_tc = w - radial_projection(state) @ w
    else:
        u_tc = w
    if gains.use_length_actuation:
        u_r = float(state.leg() @ (gains.kp_r * e + gains.kd_r * e_dot))
    else:
        u_r = 0.0
    return ThrusterCommand(u_tc=u_tc, u_r=u_r)
