"""Compliant-ground plant used as an independent slip oracle.

A point mass rides on a point foot through a stiff axial spring-damper
leg.  The ground pushes the foot back with a one-sided spring-damper
normal force (no damping on rebound) and resists horizontal foot motion
with Stribeck friction.  Replaying a recorded thruster command history
through this plant cross-checks the rigid model's no-slip predictions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .rom import _vec3

# Below this sliding speed the friction sign is interpolated linearly to
# avoid force chatter in the stick regime [m/s].
STICK_BAND = 1e-4


class ContactInstabilityError(RuntimeError):
    """Plant energy grew past the guard; integration step too coarse."""


@dataclass
class GroundParams:
    """One-sided spring-damper ground with Stribeck friction.

    literal_friction selects an uncorrected friction form (Coulomb term
    scaled by |p_dot|, zero holding force at rest); the default
    corrected form opposes motion with the usual static-to-Coulomb
    decay.
    """

    mu_s: float = 0.45
    mu_c: float = 0.405
    k_pg: float = 2.0e4
    k_dg: float = 200.0
    mu_v: float = 0.1
    sigma: float = 0.01
    literal_friction: bool = False

    def __post_init__(self):
        if not self.k_pg > 0.0:
            raise ValueError("k_pg must be positive")
        if self.k_dg < 0.0:
            raise ValueError("k_dg must be nonnegative")
        if not (self.mu_s >= self.mu_c >= 0.0):
            raise ValueError("need mu_s >= mu_c >= 0")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")


@dataclass
class LegTether:
    """Axial spring-damper standing in for the rigid massless leg.

    rest_min and rest_max are actuator travel limits on the rest length;
    hitting one stops the length drive dead instead of letting the
    commanded rest length run away from the achievable geometry.
    """

    stiffness: float = 1.0e5
    damping: float = 400.0
    foot_mass: float = 0.04
    rest_min: float = 0.05
    rest_max: float = 1.5

    def __post_init__(self):
        if not self.stiffness > 0.0 or not self.foot_mass > 0.0:
            raise ValueError("stiffness and foot_mass must be positive")
        if self.damping < 0.0:
            raise ValueError("damping must be nonnegative")
        if not 0.0 < self.rest_min < self.rest_max:
            raise ValueError("need 0 < rest_min < rest_max")


@dataclass
class PlantState:
    """Mass point, foot point, leg rest length, and slip bookkeeping.

    max_drift (largest horizontal distance from the initial foothold) is
    updated every plant step.  slip_path is the horizontal foot path
    length sampled at the command cadence by the replay drivers; sampling
    at that rate lets the zero-mean stick-phase chatter of the explicit
    friction law cancel instead of inflating the path.  aborted is set by
    the drivers when the energy guard cut a replay short.
    """

    c: np.ndarray
    c_dot: np.ndarray
    foot: np.ndarray
    foot_dot: np.ndarray
    rest_len: float
    rest_len_dot: float = 0.0
    slip_path: float = 0.0
    max_drift: float = 0.0
    foothold: np.ndarray = None
    energy_ref: float = None
    aborted: bool = False

    def __post_init__(self):
        self.c = _vec3(self.c)
        self.c_dot = _vec3(self.c_dot)
        self.foot = _vec3(self.foot)
        self.foot_dot = _vec3(self.foot_dot)
        if self.foothold is None:
            self.foothold = self.foot.copy()


def normal_force(p_z: float, p_z_dot: float, params: GroundParams) -> float:
    """One-sided ground normal force; damping only while compressing."""
    if p_z > 0.0:
        return 0.0
    f = -params.k_pg * p_z
    if p_z_dot <= 0.0:
        f -= params.k_dg * p_z_dot
    return max(0.0, f)


def friction_force(p_dot: float, u_gz: float, params: GroundParams) -> float:
    """Horizontal friction on the foot for one axis, given normal load."""
    decay = math.exp(-(p_dot / params.sigma) ** 2)
    if params.literal_friction:
        coeff = -params.mu_c + (params.mu_s - params.mu_c) * decay
        return coeff * u_gz * abs(p_dot) + params.mu_v * p_dot
    coeff = params.mu_c + (params.mu_s - params.mu_c) * decay
    direction = min(1.0, max(-1.0, p_dot / STICK_BAND))
    return -coeff * u_gz * direction + params.mu_v * p_dot


def plant_energy(ps: PlantState, mass: float, gravity: float,
                 tether: LegTether, gp: GroundParams) -> float:
    ke = 0.5 * mass * float(ps.c_dot @ ps.c_dot) \
        + 0.5 * tether.foot_mass * float(ps.foot_dot @ ps.foot_dot)
    pe = mass * gravity * ps.c[2] + tether.foot_mass * gravity * ps.foot[2]
    stretch = float(np.linalg.norm(ps.c - ps.foot)) - ps.rest_len
    pe += 0.5 * tether.stiffness * stretch * stretch
    if ps.foot[2] < 0.0:
        pe += 0.5 * gp.k_pg * ps.foot[2] ** 2
    return ke + pe


def compliant_plant_step(ps: PlantState, u_tc: np.ndarray, u_r: float,
                         mass: float, gravity: float, tether: LegTether,
                         gp: GroundParams, dt: float) -> PlantState:
    """One semi-implicit Euler step of the mass-foot-ground system.

    u_r drives the leg rest-length acceleration (rest_ddot = u_r / rest),
    mirroring how the rigid model's length input acts.  Raises
    ContactInstabilityError if total energy exceeds ten times its
    starting value, which indicates dt is too large.
    """
    u_tc = _vec3(u_tc)
    d_vec = ps.c - ps.foot
    L = float(np.linalg.norm(d_vec))
    if L < 1e-9:
        raise ContactInstabilityError("mass collapsed onto the foot")
    axis = d_vec / L
    L_dot = float(axis @ (ps.c_dot - ps.foot_dot))
    f_ax = tether.stiffness * (L - ps.rest_len) \
        + tether.damping * (L_dot - ps.rest_len_dot)
    f_on_mass = -f_ax * axis
    g_vec = np.array([0.0, 0.0, -gravity])

    N = normal_force(ps.foot[2], ps.foot_dot[2], gp)
    f_foot = f_ax * axis + tether.foot_mass * g_vec
    f_foot[2] += N
    if N > 0.0:
        f_foot[0] += friction_force(ps.foot_dot[0], N, gp)
        f_foot[1] += friction_force(ps.foot_dot[1], N, gp)

    a_mass = g_vec + (u_tc + f_on_mass) / mass
    a_foot = f_foot / tether.foot_mass

    c_dot = ps.c_dot + dt * a_mass
    foot_dot = ps.foot_dot + dt * a_foot
    c = ps.c + dt * c_dot
    foot = ps.foot + dt * foot_dot

    rest_dot = ps.rest_len_dot + dt * (u_r / max(ps.rest_len, 1e-6))
    rest = ps.rest_len + dt * rest_dot
    if rest < tether.rest_min:
        rest, rest_dot = tether.rest_min, 0.0
    elif rest > tether.rest_max:
        rest, rest_dot = tether.rest_max, 0.0

    drift = math.hypot(foot[0] - ps.foothold[0], foot[1] - ps.foothold[1])
    new = replace(ps, c=c, c_dot=c_dot, foot=foot, foot_dot=foot_dot,
                  rest_len=rest, rest_len_dot=rest_dot,
                  max_drift=max(ps.max_drift, drift))

    e = plant_energy(new, mass, gravity, tether, gp)
    e_ref = ps.energy_ref
    if e_ref is None:
        e_ref = plant_energy(ps, mass, gravity, tether, gp)
    new.energy_ref = e_ref
    if e > 10.0 * max(abs(e_ref), 1.0):
        raise ContactInstabilityError(
            f"plant energy {e:.1f} J exceeded 10x the initial "
            f"{e_ref:.1f} J; reduce the integration step")
    return new


def initial_plant_state(c0, c_dot0, u0, mass: float, gravity: float,
                        tether: LegTether, gp: GroundParams) -> PlantState:
    """Plant state matching a rigid-model pose, preloaded to static sag.

    The foot starts pressed into the ground so the normal spring holds
    the total weight, and the leg rest length starts stretched past the
    geometric length so the axial spring holds the mass.
    """
    c0 = _vec3(c0)
    u0 = _vec3(u0)
    foot = u0.copy()
    foot[2] = -(mass + tether.foot_mass) * gravity / gp.k_pg
    d_vec = c0 - foot
    L = float(np.linalg.norm(d_vec))
    axis = d_vec / L
    # axial preload so the spring carries the weight component on the axis
    rest = L + mass * gravity * axis[2] / tether.stiffness
    return PlantState(c=c0, c_dot=_vec3(c_dot0), foot=foot,
                      foot_dot=np.zeros(3), rest_len=rest)


def replay_through_contact(c0, c_dot0, u0, commands, mass: float,
                           gravity: float, tether: LegTether,
                           gp: GroundParams, cmd_dt: float,
                           substeps: int = 20) -> PlantState:
    """Run a recorded (u_tc, u_r) command history through the plant.

    commands is an iterable of (u_tc 3-vector, u_r) pairs sampled at
    cmd_dt; each is held for `substeps` plant steps of cmd_dt/substeps.
    Returns the final state, whose slip_path and max_drift fields carry
    the slip metrics.  If the energy guard trips mid-replay the state
    reached so far is returned with aborted set instead of raising.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    ps = initial_plant_state(c0, c_dot0, u0, mass, gravity, tether, gp)
    dt = float(cmd_dt) / substeps
    for u_tc, u_r in commands:
        mark = ps.foot[:2].copy()
        try:
            for _ in range(substeps):
                ps = compliant_plant_step(ps, u_tc, float(u_r), mass,
                                          gravity, tether, gp, dt)
        except ContactInstabilityError:
            ps.aborted = True
        ps.slip_path += math.hypot(ps.foot[0] - mark[0],
                                   ps.foot[1] - mark[1])
        if ps.aborted:
            break
    return ps


def track_through_contact(c0, c_dot0, u0, targets, gains, mass: float,
                          gravity: float, tether: LegTether,
                          gp: GroundParams, cmd_dt: float,
                          substeps: int = 20, rest_omega: float = 60.0,
                          rest_zeta: float = 1.0) -> PlantState:
    """Track a recorded reference history on the compliant plant.

    targets is an iterable of (c_t 3-vector, c_t_dot 3-vector) pairs
    sampled at cmd_dt.  The thruster command is recomputed from the
    compliant plant's own mass state by the tracking law, closing the
    loop the way the recording's controller did; raw force playback on
    an unstable plant diverges and measures nothing about slip.  The leg
    rest length is driven as a stiff position servo (rate rest_omega,
    damping rest_zeta) toward the commanded leg length |c_t - u0|, the
    way a position-controlled leg actuator behaves; replaying the
    acceleration-level length input through the compliant tether closes
    an unstable loop with the axial spring.  Returns the final state
    with the slip metrics; on an energy-guard trip the state reached so
    far comes back with aborted set.
    """
    from .control import CartesianReference, thruster_feedback
    from .rom import PendulumState

    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    u0 = _vec3(u0)
    ps = initial_plant_state(c0, c_dot0, u0, mass, gravity, tether, gp)
    dt = float(cmd_dt) / substeps
    w2 = rest_omega * rest_omega
    bz = 2.0 * rest_zeta * rest_omega
    for c_t, c_t_dot in targets:
        view = PendulumState(c=ps.c, c_dot=ps.c_dot, u=ps.foot,
                             m=mass, g=gravity)
        cmd = thruster_feedback(view, CartesianReference(c_t, c_t_dot),
                                gains)
        r_cmd = _vec3(c_t) - u0
        rest_cmd = float(np.linalg.norm(r_cmd))
        rest_cmd_dot = float(r_cmd @ _vec3(c_t_dot)) / max(rest_cmd, 1e-9)
        acc = w2 * (rest_cmd - ps.rest_len) \
            + bz * (rest_cmd_dot - ps.rest_len_dot)
        u_r = ps.rest_len * acc
        mark = ps.foot[:2].copy()
        try:
            for _ in range(substeps):
                ps = compliant_plant_step(ps, cmd.u_tc, u_r, mass,
                                          gravity, tether, gp, dt)
        except ContactInstabilityError:
            ps.aborted = True
        ps.slip_path += math.hypot(ps.foot[0] - mark[0],
                                   ps.foot[1] - mark[1])
        if ps.aborted:
            break
    return ps
