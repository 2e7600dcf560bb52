"""No-slip and state constraints on candidate references.

Each constraint is written h >= 0:

  h1 = mu_s * u_gz - s_x * u_gx       friction cone, x axis
  h2 = mu_s * u_gz - s_y * u_gy       friction cone, y axis
  h3 = u_gz - f_min                   minimum normal force
  h4 = theta_ref - theta_min          minimum reference tilt (optional)

u_g is the hypothetical ground-reaction force obtained by feeding the
candidate reference through the tracking law, the constraint-multiplier
solve, and the GRF map at the supplied state.  Because the state fixes
the leg geometry and the tracking law is linear in the reference, the
force rows are exactly affine in a Cartesian-chart reference; a
tilt-chart reference enters through the (nonlinear) chart map.  s_x,
s_y are cone-row signs frozen at the linearization point so the rows
are smooth there.  theta_ref is the tilt of the reference position
about the state's pivot.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .control import CartesianReference, TrackingGains, thruster_feedback
from .rom import (HEADING_TOL, PendulumState, cartesian_from_vlip, grf,
                  solve_lambda, vlip_chart_blocks)

CHARTS = ("cartesian", "vlip")
# GRF components smaller than this get a +1 frozen sign (cone row kink).
SIGN_FREEZE_TOL = 1e-9


@dataclass
class ConstraintParams:
    """Friction coefficient, force floor, and tilt floor."""

    mu_s: float
    f_min: float = 20.0
    theta_min: float = math.radians(5.0)
    include_angle: bool = True

    def __post_init__(self):
        self.mu_s = float(self.mu_s)
        self.f_min = float(self.f_min)
        self.theta_min = float(self.theta_min)
        if self.mu_s <= 0.0:
            raise ValueError("mu_s must be positive")
        if self.f_min < 0.0:
            raise ValueError("f_min must be nonnegative")
        if not 0.0 <= self.theta_min < math.pi / 2.0:
            raise ValueError("theta_min must lie in [0, pi/2)")

    @property
    def n_constraints(self) -> int:
        return 4 if self.include_angle else 3


@dataclass
class ReferenceVector:
    """A 6-vector reference in one of two charts.

    cartesian: [c_t; c_t_dot], absolute mass target and velocity.
    vlip:      [theta, phi, l, theta_dot, phi_dot, l_dot] about the
               current pivot.
    """

    chart: str
    values: np.ndarray

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ValueError(f"unknown chart {self.chart!r}")
        v = np.asarray(self.values, dtype=float).reshape(6)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite reference values")
        self.values = v.copy()

    def with_values(self, values) -> "ReferenceVector":
        return ReferenceVector(self.chart, values)

    def to_cartesian(self, state: PendulumState):
        """Target mass position and velocity implied by this reference."""
        if self.chart == "cartesian":
            return self.values[:3].copy(), self.values[3:].copy()
        return cartesian_from_vlip(self.values, state.u)


@dataclass
class ConstraintLinearization:
    """First-order model h(x) ~ J_r x + d_r about ref_point."""

    h: np.ndarray
    J_r: np.ndarray
    d_r: np.ndarray
    ref_point: np.ndarray
    frozen_signs: tuple


def _hypothetical_grf(state: PendulumState, c_t: np.ndarray,
                      c_t_dot: np.ndarray, gains: TrackingGains):
    """GRF the state's leg would see while commanded toward (c_t, c_t_dot)."""
    cmd = thruster_feedback(state, CartesianReference(c_t, c_t_dot), gains)
    lam = solve_lambda(state, cmd)
    return cmd, lam, grf(state, lam)


def _tilt(r: np.ndarray) -> float:
    return math.atan2(math.hypot(r[0], r[1]), r[2])


def _rows(u_g: np.ndarray, theta_ref: float, params: ConstraintParams,
          signs=None) -> np.ndarray:
    if signs is None:
        hx = params.mu_s * u_g[2] - abs(u_g[0])
        hy = params.mu_s * u_g[2] - abs(u_g[1])
    else:
        hx = params.mu_s * u_g[2] - signs[0] * u_g[0]
        hy = params.mu_s * u_g[2] - signs[1] * u_g[1]
    h = [hx, hy, u_g[2] - params.f_min]
    if params.include_angle:
        h.append(theta_ref - params.theta_min)
    return np.array(h)


def eval_constraints(state: PendulumState, ref: ReferenceVector,
                     gains: TrackingGains,
                     params: ConstraintParams) -> np.ndarray:
    """Exact constraint values for one candidate reference."""
    c_t, c_t_dot = ref.to_cartesian(state)
    _, _, u_g = _hypothetical_grf(state, c_t, c_t_dot, gains)
    return _rows(u_g, _tilt(c_t - state.u), params)


def _frozen_sign(component: float, axis: str) -> float:
    if abs(component) < SIGN_FREEZE_TOL:
        warnings.warn(
            f"cone row sign for {axis} frozen to +1: |u_g{axis}| < "
            f"{SIGN_FREEZE_TOL} N at the linearization point",
            RuntimeWarning, stacklevel=3)
        return 1.0
    return 1.0 if component > 0.0 else -1.0


def linearize(state: PendulumState, ref0: ReferenceVector,
              gains: TrackingGains,
              params: ConstraintParams) -> ConstraintLinearization:
    """Analytic constraint Jacobian about ref0, in ref0's chart.

    The multiplier is affine in the commanded target, so the force-row
    gradients are outer products of the state leg with the multiplier
    gradient; only the chart map and the tilt row add curvature.
    """
    c_t, c_t_dot = ref0.to_cartesian(state)
    _, _, u_g = _hypothetical_grf(state, c_t, c_t_dot, gains)
    r_s = state.leg()
    l2 = float(r_s @ r_s)
    m = state.m

    # d(lambda)/d(c_t, c_t_dot): lambda = (m/l^2)(-r.(g + u_tc/m) + u_r)
    dlam_dc = np.zeros(3)
    dlam_dcd = np.zeros(3)
    if gains.use_length_actuation:
        dlam_dc += gains.kp_r * r_s
        dlam_dcd += gains.kd_r * r_s
    if not gains.use_radial_projection:
        # with projection on, r.u_tc vanishes identically
        dlam_dc -= (gains.kp_t / m) * r_s
        dlam_dcd -= (gains.kd_t / m) * r_s
    dlam_dc *= m / l2
    dlam_dcd *= m / l2

    Dug = np.zeros((3, 6))
    Dug[:, :3] = np.outer(r_s, dlam_dc)
    Dug[:, 3:] = np.outer(r_s, dlam_dcd)

    s_x = _frozen_sign(u_g[0], "x")
    s_y = _frozen_sign(u_g[1], "y")

    J_cart = np.zeros((params.n_constraints, 6))
    J_cart[0] = params.mu_s * Dug[2] - s_x * Dug[0]
    J_cart[1] = params.mu_s * Dug[2] - s_y * Dug[1]
    J_cart[2] = Dug[2]
    r_ref = c_t - state.u
    theta_ref = _tilt(r_ref)
    if params.include_angle:
        rho = math.hypot(r_ref[0], r_ref[1])
        lr2 = float(r_ref @ r_ref)
        if rho >= HEADING_TOL:
            J_cart[3, :3] = np.array([r_ref[2] * r_ref[0] / rho,
                                      r_ref[2] * r_ref[1] / rho,
                                      -rho]) / lr2
        # at the vertical apex the tilt gradient is undefined; leave zero

    if ref0.chart == "vlip":
        Jq, H = vlip_chart_blocks(ref0.values)
        M = np.zeros((6, 6))
        M[:3, :3] = Jq
        M[3:, :3] = H
        M[3:, 3:] = Jq
        J_r = J_cart @ M
        if params.include_angle:
            # tilt is the first chart coordinate itself
            J_r[3] = 0.0
            J_r[3, 0] = 1.0
    else:
        J_r = J_cart

    h = _rows(u_g, theta_ref, params, signs=(s_x, s_y))
    d_r = h - J_r @ ref0.values
    return ConstraintLinearization(h=h, J_r=J_r, d_r=d_r,
                                   ref_point=ref0.values.copy(),
                                   frozen_signs=(s_x, s_y))


def fd_jacobian(state: PendulumState, ref0: ReferenceVector,
                gains: TrackingGains, params: ConstraintParams,
                step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian oracle with signs frozen at ref0.

    Freezing the cone-row signs keeps the differenced function smooth so
    the comparison against the analytic Jacobian is meaningful even when
    a tangential GRF component sits near zero.
    """
    c_t, c_t_dot = ref0.to_cartesian(state)
    _, _, ug0 = _hypothetical_grf(state, c_t, c_t_dot, gains)
    signs = (_frozen_sign(ug0[0], "x"), _frozen_sign(ug0[1], "y"))

    def h_at(values):
        ref = ref0.with_values(values)
        ct, ctd = ref.to_cartesian(state)
        _, _, u_g = _hypothetical_grf(state, ct, ctd, gains)
        return _rows(u_g, _tilt(ct - state.u), params, signs=signs)

    J = np.zeros((params.n_constraints, 6))
    for i in range(6):
        dv = np.zeros(6)
        dv[i] = step
        J[:, i] = (h_at(ref0.values + dv) - h_at(ref0.values - dv)) \
            / (2.0 * step)
    return J
