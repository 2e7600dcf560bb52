"""Variable-length inverted pendulum (VLIP) reduced-order model.

A point mass rides on a massless extensible leg pinned at the center of
pressure.  The leg-length behavior is imposed as an acceleration-level
kinematic constraint whose Lagrange multiplier doubles as the ground
reaction force estimate: u_g = J_s^T * lambda with J_s = (c - u)^T.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

# Pivot/mass coincidence below this length is rejected as degenerate.
PIVOT_TOL = 1e-9
# Tilt below this is treated as heading-undefined (spherical chart apex).
HEADING_TOL = 1e-9


class DegeneratePivotError(ValueError):
    """Point mass coincides with the center of pressure."""


def _vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        v = v.reshape(3)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite 3-vector")
    return v.copy()


@dataclass
class PendulumState:
    """Reduced-order state: mass point, its velocity, and the pivot.

    c       point-mass position [m]
    c_dot   point-mass velocity [m/s]
    u       center of pressure (pivot) [m]
    u_ddot  pivot acceleration feedthrough [m/s^2], normally zero
    m       mass [kg]
    g       gravitational acceleration magnitude [m/s^2]
    """

    c: np.ndarray
    c_dot: np.ndarray
    u: np.ndarray
    u_ddot: np.ndarray = None
    m: float = 5.0
    g: float = 9.81

    def __post_init__(self):
        self.c = _vec3(self.c)
        self.c_dot = _vec3(self.c_dot)
        self.u = _vec3(self.u)
        self.u_ddot = np.zeros(3) if self.u_ddot is None else _vec3(self.u_ddot)
        self.m = float(self.m)
        self.g = float(self.g)
        if self.m <= 0.0:
            raise ValueError("mass must be positive")
        if self.g <= 0.0:
            raise ValueError("gravity must be positive")
        if float(np.linalg.norm(self.c - self.u)) <= PIVOT_TOL:
            raise DegeneratePivotError("pendulum length is zero")

    def leg(self) -> np.ndarray:
        return self.c - self.u

    def leg_length(self) -> float:
        return float(np.linalg.norm(self.c - self.u))

    def gravity_vec(self) -> np.ndarray:
        return np.array([0.0, 0.0, -self.g])


@dataclass
class ThrusterCommand:
    """Thruster force on the mass [N] and leg-length acceleration input."""

    u_tc: np.ndarray
    u_r: float = 0.0

    def __post_init__(self):
        self.u_tc = _vec3(self.u_tc)
        self.u_r = float(self.u_r)
        if not math.isfinite(self.u_r):
            raise ValueError("non-finite length input")


@dataclass
class GrfEstimate:
    """Constraint multiplier and the ground-reaction force it implies."""

    lam: float
    u_g: np.ndarray
    J_s: np.ndarray


def pendulum_jacobian(state: PendulumState) -> np.ndarray:
    """Row Jacobian J_s = (c - u)^T of the squared-length constraint."""
    J = state.c - state.u
    if float(np.linalg.norm(J)) <= PIVOT_TOL:
        raise DegeneratePivotError("pendulum length is zero")
    return J


def _constraint_rhs(state: PendulumState, cmd: ThrusterCommand,
                    exact_length_constraint: bool) -> float:
    # Constraint right-hand side: J_s (c_ddot - u_ddot) = u_r.  The exact
    # variant keeps the centripetal term of the true second length
    # derivative (pivot velocity taken as zero).
    rhs = cmd.u_r
    if exact_length_constraint:
        rhs -= float(state.c_dot @ state.c_dot)
    return rhs


def solve_lambda(state: PendulumState, cmd: ThrusterCommand,
                 exact_length_constraint: bool = False) -> float:
    """Closed-form constraint multiplier, lambda = (J J^T/m)^-1 (...)."""
    J = pendulum_jacobian(state)
    l2 = float(J @ J)
    a = -float(J @ (state.gravity_vec() + cmd.u_tc / state.m))
    a += _constraint_rhs(state, cmd, exact_length_constraint)
    a += float(J @ state.u_ddot)
    return state.m * a / l2


def grf(state: PendulumState, lam: float) -> np.ndarray:
    """Ground reaction force estimate u_g = J_s^T * lambda."""
    return pendulum_jacobian(state) * float(lam)


def grf_estimate(state: PendulumState, cmd: ThrusterCommand,
                 exact_length_constraint: bool = False) -> GrfEstimate:
    J = pendulum_jacobian(state)
    lam = solve_lambda(state, cmd, exact_length_constraint)
    return GrfEstimate(lam=lam, u_g=J * lam, J_s=J)


def rom_accel(state: PendulumState, cmd: ThrusterCommand,
              exact_length_constraint: bool = False) -> np.ndarray:
    """Mass acceleration under thruster force and the leg constraint."""
    lam = solve_lambda(state, cmd, exact_length_constraint)
    return state.gravity_vec() + cmd.u_tc / state.m \
        + pendulum_jacobian(state) * (lam / state.m)


def kkt_solve(state: PendulumState, cmd: ThrusterCommand,
              exact_length_constraint: bool = False):
    """Dense 4x4 KKT solve of the constrained dynamics.

    Independent route to (c_ddot, lambda): assembles the block system
    [[m I, -J^T], [J, 0]] and hands it to a linear solver.  Used as an
    oracle against the closed-form path.
    """
    J = pendulum_jacobian(state)
    m = state.m
    M = np.zeros((4, 4))
    M[:3, :3] = m * np.eye(3)
    M[:3, 3] = -J
    M[3, :3] = J
    rhs = np.zeros(4)
    rhs[:3] = m * state.gravity_vec() + cmd.u_tc
    rhs[3] = _constraint_rhs(state, cmd, exact_length_constraint) \
        + float(J @ state.u_ddot)
    sol = np.linalg.solve(M, rhs)
    return sol[:3], float(sol[3])


def step_rk4(state: PendulumState, cmd: ThrusterCommand, dt: float,
             exact_length_constraint: bool = False) -> PendulumState:
    """Fixed-step RK4 advance of (c, c_dot), holding cmd and u constant."""
    dt = float(dt)
    if dt <= 0.0:
        raise ValueError("dt must be positive")

    def deriv(c, c_dot):
        s = replace(state, c=c, c_dot=c_dot)
        return c_dot, rom_accel(s, cmd, exact_length_constraint)

    c0, v0 = state.c, state.c_dot
    k1x, k1v = deriv(c0, v0)
    k2x, k2v = deriv(c0 + 0.5 * dt * k1x, v0 + 0.5 * dt * k1v)
    k3x, k3v = deriv(c0 + 0.5 * dt * k2x, v0 + 0.5 * dt * k2v)
    k4x, k4v = deriv(c0 + dt * k3x, v0 + dt * k3v)
    c_new = c0 + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    v_new = v0 + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return replace(state, c=c_new, c_dot=v_new)


def pendulum_energy(state: PendulumState) -> float:
    """Kinetic plus gravitational potential energy of the point mass."""
    ke = 0.5 * state.m * float(state.c_dot @ state.c_dot)
    return ke + state.m * state.g * float(state.c[2])


# --- spherical (tilt/heading/length) chart -------------------------------

@dataclass
class VlipCoords:
    """Spherical leg coordinates: c - u = l (sin t cos p, sin t sin p, cos t).

    theta is measured from +z, phi from +x in the horizontal plane.
    heading_defined is False at the vertical apex where phi is arbitrary.
    """

    theta: float
    phi: float
    l: float
    theta_dot: float = 0.0
    phi_dot: float = 0.0
    l_dot: float = 0.0
    heading_defined: bool = True

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.phi, self.l,
                         self.theta_dot, self.phi_dot, self.l_dot])


def _sph_frame(theta: float, phi: float):
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    direction = np.array([st * cp, st * sp, ct])
    e_theta = np.array([ct * cp, ct * sp, -st])
    e_phi = np.array([-sp, cp, 0.0])
    return direction, e_theta, e_phi


def vlip_from_cartesian(c, u, c_dot=None, u_dot=None) -> VlipCoords:
    """Spherical chart of the leg vector, with rates when velocities given."""
    r = _vec3(c) - _vec3(u)
    l = float(np.linalg.norm(r))
    if l <= PIVOT_TOL:
        raise DegeneratePivotError("pendulum length is zero")
    rho = math.hypot(r[0], r[1])
    theta = math.atan2(rho, r[2])
    heading_defined = theta >= HEADING_TOL
    phi = math.atan2(r[1], r[0]) if heading_defined else 0.0
    theta_dot = phi_dot = l_dot = 0.0
    if c_dot is not None:
        rd = _vec3(c_dot) - (np.zeros(3) if u_dot is None else _vec3(u_dot))
        l_dot = float(r @ rd) / l
        if heading_defined:
            rho_dot = (r[0] * rd[0] + r[1] * rd[1]) / rho
            theta_dot = (r[2] * rho_dot - rho * rd[2]) / (l * l)
            phi_dot = (r[0] * rd[1] - r[1] * rd[0]) / (rho * rho)
        else:
            theta_dot = math.hypot(rd[0], rd[1]) / l
    return VlipCoords(theta, phi, l, theta_dot, phi_dot, l_dot,
                      heading_defined)


def cartesian_from_vlip(q, u, u_dot=None):
    """Inverse chart: mass position and velocity from spherical coordinates."""
    if isinstance(q, VlipCoords):
        vals = q.as_array()
    else:
        vals = np.asarray(q, dtype=float).reshape(6)
    theta, phi, l = vals[0], vals[1], vals[2]
    if l <= PIVOT_TOL:
        raise DegeneratePivotError("chart length is zero")
    direction, _, _ = _sph_frame(theta, phi)
    c = _vec3(u) + l * direction
    Jq, _ = vlip_chart_blocks(vals)
    c_dot = Jq @ vals[3:6]
    if u_dot is not None:
        c_dot = c_dot + _vec3(u_dot)
    return c, c_dot


def vlip_chart_blocks(vals):
    """Position and rate Jacobians of the spherical chart.

    Returns (Jq, H) with Jq = d(c - u)/d(theta, phi, l) and
    H = d(Jq qdot)/d(theta, phi, l), so that the full chart map
    [c_t; c_t_dot] has Jacobian [[Jq, 0], [H, Jq]].
    """
    vals = np.asarray(vals, dtype=float).reshape(6)
    theta, phi, l = vals[0], vals[1], vals[2]
    td, pd, ld = vals[3], vals[4], vals[5]
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    direction = np.array([st * cp, st * sp, ct])
    e_theta = np.array([ct * cp, ct * sp, -st])
    e_phi = np.array([-sp, cp, 0.0])
    rho_hat = np.array([cp, sp, 0.0])
    Jq = np.column_stack([l * e_theta, l * st * e_phi, direction])
    dv_dtheta = -l * td * direction + l * ct * pd * e_phi + ld * e_theta
    dv_dphi = l * td * ct * e_phi - l * st * pd * rho_hat + ld * st * e_phi
    dv_dl = td * e_theta + st * pd * e_phi
    H = np.column_stack([dv_dtheta, dv_dphi, dv_dl])
    return Jq, H
