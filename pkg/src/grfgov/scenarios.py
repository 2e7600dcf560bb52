"""Scenario configuration, reference trajectories, and the run loop.

Two scenarios are provided:

  vlip  A fixed pivot with sinusoidal tilt/heading/length references and
        the 4-row constraint stack (tilt-chart governor).
  walk  A stepping pivot schedule under a constant-speed center-of-mass
        reference with the 3-row stack (Cartesian-chart governor), the
        leg-axis thruster projection disabled.  The walk scenario keeps
        the length channel active: without it the reduced model has no
        way to hold its target height.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .constraints import ConstraintParams, ReferenceVector, eval_constraints
from .contact import GroundParams
from .control import CartesianReference, TrackingGains, thruster_feedback
from .governor import ErgRates, erg_step, lyapunov
from .rom import PendulumState, cartesian_from_vlip, grf, solve_lambda, \
    step_rk4, vlip_from_cartesian
from .telemetry import TelemetryRecord

SCENARIOS = ("vlip", "walk")


class SimulationError(RuntimeError):
    """A module error, annotated with the failing step."""


@dataclass
class ErgConfig:
    alpha_r: float
    alpha_t: float
    alpha_n: float
    enabled: bool = True

    def rates(self) -> ErgRates:
        return ErgRates(self.alpha_r, self.alpha_t, self.alpha_n)


@dataclass
class SimTiming:
    dt_s: float = 1e-3
    duration_s: float = 2.0

    def __post_init__(self):
        if not self.dt_s > 0.0 or not self.duration_s > 0.0:
            raise ValueError("dt_s and duration_s must be positive")


@dataclass
class WalkParams:
    """Stepping schedule: forward speed, gait and sway timing, foothold
    lateral offset."""

    speed_mps: float = 0.3
    gait_period_s: float = 0.75
    lat_amp_m: float = 0.025
    lat_period_s: float = 1.5
    height_m: float = 0.6
    foot_offset_m: float = 0.05

    def __post_init__(self):
        if not self.gait_period_s > 0.0 or not self.lat_period_s > 0.0:
            raise ValueError("gait and sway periods must be positive")
        if not self.height_m > 0.0:
            raise ValueError("height must be positive")


@dataclass
class ScenarioConfig:
    scenario: str
    mass_kg: float
    gravity: float
    gains: TrackingGains
    erg: ErgConfig
    constraints: ConstraintParams
    ground: GroundParams
    sim: SimTiming
    walk: WalkParams = field(default_factory=WalkParams)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if not self.mass_kg > 0.0 or not self.gravity > 0.0:
            raise ValueError("mass and gravity must be positive")

    @property
    def chart(self) -> str:
        return "vlip" if self.scenario == "vlip" else "cartesian"


def vlip_config() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="vlip", mass_kg=5.0, gravity=9.81,
        gains=TrackingGains(660.0, 60.0, 660.0, 60.0,
                            use_radial_projection=True,
                            use_length_actuation=True),
        erg=ErgConfig(alpha_r=1.0, alpha_t=5.0, alpha_n=2.0),
        constraints=ConstraintParams(mu_s=0.45, f_min=20.0,
                                     theta_min=math.radians(5.0),
                                     include_angle=True),
        ground=GroundParams(mu_s=0.45, mu_c=0.405),
        sim=SimTiming(dt_s=1e-3, duration_s=2.0))


def walk_config() -> ScenarioConfig:
    return ScenarioConfig(
        scenario="walk", mass_kg=5.0, gravity=9.81,
        gains=TrackingGains(400.0, 40.0, 400.0, 40.0,
                            use_radial_projection=False,
                            use_length_actuation=True),
        erg=ErgConfig(alpha_r=10.0, alpha_t=15.0, alpha_n=20.0),
        constraints=ConstraintParams(mu_s=0.25, f_min=20.0,
                                     theta_min=math.radians(5.0),
                                     include_angle=False),
        ground=GroundParams(mu_s=0.25, mu_c=0.225),
        sim=SimTiming(dt_s=1e-3, duration_s=3.0))


def default_config(scenario: str) -> ScenarioConfig:
    if scenario == "vlip":
        return vlip_config()
    if scenario == "walk":
        return walk_config()
    raise ValueError(f"unknown scenario {scenario!r}")


# --- JSON config ----------------------------------------------------------

_GAIN_KEYS = {"kp_t", "kd_t", "kp_r", "kd_r", "use_radial_projection",
              "use_length_actuation"}
_ERG_KEYS = {"alpha_r", "alpha_t", "alpha_n", "enabled"}
_CONSTRAINT_KEYS = {"mu_s", "f_min_n", "theta_min_rad", "include_angle"}
_GROUND_KEYS = {"k_pg", "k_dg", "mu_s", "mu_c", "mu_v", "sigma",
                "literal_friction"}
_SIM_KEYS = {"dt_s", "duration_s"}
_WALK_KEYS = {"speed_mps", "gait_period_s", "lat_amp_m", "lat_period_s",
              "height_m", "foot_offset_m"}
_TOP_KEYS = {"scenario", "mass_kg", "gravity", "gains", "erg",
             "constraints", "ground", "sim", "walk"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ValueError(f"config section {where!r} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ValueError(
            f"unknown config key(s) in {where}: {sorted(unknown)}")


def _merge(dc, section: dict, rename=None):
    rename = rename or {}
    kwargs = {rename.get(k, k): v for k, v in section.items()}
    return replace(dc, **kwargs)


def load_config(path, scenario: str = None) -> ScenarioConfig:
    """Load a JSON config; unknown keys are rejected.

    When `scenario` is given it must match the file's scenario key.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    _check_keys(raw, _TOP_KEYS, "top level")
    kind = raw.get("scenario")
    if kind is None:
        if scenario is None:
            raise ValueError("config missing 'scenario' key")
        kind = scenario
    if scenario is not None and kind != scenario:
        raise ValueError(
            f"config scenario {kind!r} does not match requested "
            f"{scenario!r}")
    cfg = default_config(kind)
    if "mass_kg" in raw:
        cfg = replace(cfg, mass_kg=float(raw["mass_kg"]))
    if "gravity" in raw:
        cfg = replace(cfg, gravity=float(raw["gravity"]))
    for key, allowed, attr, rename in (
            ("gains", _GAIN_KEYS, "gains", None),
            ("erg", _ERG_KEYS, "erg", None),
            ("constraints", _CONSTRAINT_KEYS, "constraints",
             {"f_min_n": "f_min", "theta_min_rad": "theta_min"}),
            ("ground", _GROUND_KEYS, "ground", None),
            ("sim", _SIM_KEYS, "sim", None),
            ("walk", _WALK_KEYS, "walk", None)):
        if key in raw:
            _check_keys(raw[key], allowed, key)
            cfg = replace(cfg, **{attr: _merge(getattr(cfg, attr),
                                               raw[key], rename)})
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Dump a config to the JSON schema (inverse of load_config)."""

    def section(dc, rename=None):
        rename = rename or {}
        return {rename.get(f.name, f.name): getattr(dc, f.name)
                for f in fields(dc)}

    return {
        "scenario": cfg.scenario,
        "mass_kg": cfg.mass_kg,
        "gravity": cfg.gravity,
        "gains": section(cfg.gains),
        "erg": section(cfg.erg),
        "constraints": section(cfg.constraints,
                               {"f_min": "f_min_n",
                                "theta_min": "theta_min_rad"}),
        "ground": section(cfg.ground),
        "sim": section(cfg.sim),
        "walk": section(cfg.walk),
    }


# --- references and schedule ---------------------------------------------

def vlip_reference(t: float) -> ReferenceVector:
    """Sinusoidal tilt/heading/length target with zero reference rates."""
    ph = math.pi * t - math.pi
    theta = 0.45 + 0.45 * math.sin(ph)
    phi = -1.5 * math.sin(ph)
    l = 0.4 + 0.1 * math.cos(ph)
    return ReferenceVector("vlip", [theta, phi, l, 0.0, 0.0, 0.0])


def walk_reference(t: float, walk: WalkParams) -> ReferenceVector:
    """Constant forward speed, sinusoidal sway, constant height."""
    w = 2.0 * math.pi / walk.lat_period_s
    c_t = [walk.speed_mps * t, walk.lat_amp_m * math.sin(w * t),
           walk.height_m]
    c_t_dot = [walk.speed_mps, walk.lat_amp_m * w * math.cos(w * t), 0.0]
    return ReferenceVector("cartesian", c_t + c_t_dot)


def cop_schedule(t: float, walk: WalkParams) -> np.ndarray:
    """Piecewise-constant foothold: x centered under the step's mean
    reference, y alternating sides each step."""
    T = walk.gait_period_s
    k = int(math.floor(t / T))
    u_x = k * walk.speed_mps * T + 0.5 * walk.speed_mps * T
    u_y = walk.foot_offset_m if k % 2 == 0 else -walk.foot_offset_m
    return np.array([u_x, u_y, 0.0])


def make_reference(cfg: ScenarioConfig, t: float) -> ReferenceVector:
    if cfg.scenario == "vlip":
        return vlip_reference(t)
    return walk_reference(t, cfg.walk)


def pivot_at(cfg: ScenarioConfig, t: float) -> np.ndarray:
    if cfg.scenario == "vlip":
        return np.zeros(3)
    return cop_schedule(t, cfg.walk)


def initial_state(cfg: ScenarioConfig) -> PendulumState:
    """Plant pose implied by the t=0 reference, at rest."""
    u0 = pivot_at(cfg, 0.0)
    ref0 = make_reference(cfg, 0.0)
    if ref0.chart == "vlip":
        c0, _ = cartesian_from_vlip(ref0.values, u0)
    else:
        c0 = ref0.values[:3]
    return PendulumState(c=c0, c_dot=np.zeros(3), u=u0,
                         m=cfg.mass_kg, g=cfg.gravity)


# --- simulation loop ------------------------------------------------------

@dataclass
class SimDiagnostics:
    """Per-step governor internals for the descent and nullspace checks.

    Arrays are empty when the governor is disabled.
    """

    d_pre: np.ndarray
    rate_matrix: np.ndarray
    min_h_w: np.ndarray
    min_h_r: np.ndarray
    tangential_residual: np.ndarray
    v_t_norm: np.ndarray
    branch: list


@dataclass
class SimResult:
    records: list
    diagnostics: SimDiagnostics
    config: ScenarioConfig


def _pose_state(cfg: ScenarioConfig, x: np.ndarray,
                pivot_state: PendulumState) -> PendulumState:
    """Pose a perfectly tracked plant would hold under reference x."""
    ref = ReferenceVector(cfg.chart, x)
    c, c_dot = ref.to_cartesian(pivot_state)
    return PendulumState(c=c, c_dot=c_dot, u=pivot_state.u,
                         m=cfg.mass_kg, g=cfg.gravity)


def admissible_rows(cfg: ScenarioConfig, x: np.ndarray,
                    pivot_state: PendulumState) -> np.ndarray:
    """Constraint rows a candidate reference satisfies once tracked.

    Screening a candidate against its own perfectly tracked pose asks
    whether holding that reference is sustainable, independent of the
    transient the plant is currently riding.  The governor steers on
    this map, so it retains authority over every row it monitors.
    """
    pose = _pose_state(cfg, x, pivot_state)
    ref = ReferenceVector(cfg.chart, x)
    return eval_constraints(pose, ref, cfg.gains, cfg.constraints)


def admissible_jacobian(cfg: ScenarioConfig, x: np.ndarray,
                        pivot_state: PendulumState) -> np.ndarray:
    """Analytic Jacobian of admissible_rows at x, in x's chart.

    The screening map moves the evaluation pose together with the
    candidate, so its derivative is not the fixed-pose linearization.
    At the tracked pose the feedback terms vanish and u_g = A r_z r
    with r the candidate leg and A = m g / |r|^2, so each force row is
    a smooth function of the candidate position alone (rate columns
    are identically zero).  Cone-row signs are frozen at x as in the
    constraints module.
    """
    from .constraints import SIGN_FREEZE_TOL
    pose = _pose_state(cfg, x, pivot_state)
    r = pose.leg()
    l2 = float(r @ r)
    mg = cfg.mass_kg * cfg.gravity
    A = mg / l2
    e_z = np.array([0.0, 0.0, 1.0])
    # d(u_g)/d(position) for u_g = A(r) r_z r
    Dug = A * (np.outer(r, e_z) + r[2] * np.eye(3)
               - 2.0 * r[2] * np.outer(r, r) / l2)
    u_g = A * r[2] * r
    mu = cfg.constraints.mu_s

    def sgn(c):
        return 1.0 if abs(c) < SIGN_FREEZE_TOL or c > 0.0 else -1.0

    n = cfg.constraints.n_constraints
    Jp = np.zeros((n, 3))
    Jp[0] = mu * Dug[2] - sgn(u_g[0]) * Dug[0]
    Jp[1] = mu * Dug[2] - sgn(u_g[1]) * Dug[1]
    Jp[2] = Dug[2]
    if cfg.constraints.include_angle:
        rho = math.hypot(r[0], r[1])
        if rho >= 1e-9:
            Jp[3] = np.array([r[2] * r[0] / rho, r[2] * r[1] / rho,
                              -rho]) / l2

    J = np.zeros((n, 6))
    if cfg.chart == "vlip":
        from .rom import vlip_chart_blocks
        Jq, _ = vlip_chart_blocks(x)
        J[:, :3] = Jp @ Jq
        if cfg.constraints.include_angle:
            J[3] = 0.0
            J[3, 0] = 1.0
    else:
        J[:, :3] = Jp
    return J


def fd_admissible_jacobian(cfg: ScenarioConfig, x: np.ndarray,
                           pivot_state: PendulumState,
                           step: float = 1e-6) -> np.ndarray:
    """Central-difference oracle for admissible_jacobian."""
    n = cfg.constraints.n_constraints
    J = np.zeros((n, 6))
    for i in range(6):
        dv = np.zeros(6)
        dv[i] = step
        J[:, i] = (admissible_rows(cfg, x + dv, pivot_state)
                   - admissible_rows(cfg, x - dv, pivot_state)) \
            / (2.0 * step)
    return J


def run_simulation(cfg: ScenarioConfig) -> SimResult:
    """Run one scenario and return telemetry plus governor diagnostics."""
    state = initial_state(cfg)
    x_w = make_reference(cfg, 0.0).values.copy()
    rates = cfg.erg.rates()
    dt = cfg.sim.dt_s
    n_steps = int(round(cfg.sim.duration_s / dt))
    records = []
    d_pre, rate_mats, min_hw, min_hr, tang_res, vt_norm, branches = \
        [], [], [], [], [], [], []

    for k in range(n_steps):
        t = k * dt
        try:
            if cfg.scenario == "walk":
                u_now = pivot_at(cfg, t)
                if not np.array_equal(u_now, state.u):
                    state = replace(state, u=u_now)
            ref_r = make_reference(cfg, t)
            x_r = ref_r.values
            h_r = admissible_rows(cfg, x_r, state)
            if cfg.erg.enabled:
                h_w = admissible_rows(cfg, x_w, state)
                J_r = admissible_jacobian(cfg, x_w, state)
                gov = erg_step(x_w, x_r, h_r, h_w, J_r, rates, dt)
                x_w = gov.x_w
                branch = gov.last_branch
                V, V_dot, _ = lyapunov(gov)
                d_pre.append(gov.d_pre)
                rate_mats.append(gov.rate_matrix)
                min_hw.append(float(np.min(h_w)))
                min_hr.append(float(np.min(h_r)))
                tang_res.append(gov.tangential_residual)
                vt_norm.append(gov.v_t_norm)
                branches.append(branch)
            else:
                x_w = x_r.copy()
                h_w = h_r
                branch = "off"
                V, V_dot = 0.0, 0.0
            ref_applied = ReferenceVector(cfg.chart, x_w)
            c_t, c_t_dot = ref_applied.to_cartesian(state)
            cmd = thruster_feedback(state, CartesianReference(c_t, c_t_dot),
                                    cfg.gains)
            lam = solve_lambda(state, cmd)
            u_g = grf(state, lam)
            leg = vlip_from_cartesian(state.c, state.u, state.c_dot)
            records.append(TelemetryRecord(
                t=t, c=state.c.copy(), c_dot=state.c_dot.copy(),
                theta=leg.theta, phi=leg.phi, l=leg.l,
                x_r=x_r.copy(), x_w=x_w.copy(), u_tc=cmd.u_tc.copy(),
                u_r=cmd.u_r, lam=lam, u_g=u_g.copy(), h_r=h_r.copy(),
                h_w=np.asarray(h_w).copy(), V=V, V_dot=V_dot,
                branch=branch))
            state = step_rk4(state, cmd, dt)
        except Exception as exc:
            raise SimulationError(
                f"step {k} (t = {t:.6f} s) failed: {exc}") from exc

    diags = SimDiagnostics(
        d_pre=np.array(d_pre) if d_pre else np.zeros((0, 6)),
        rate_matrix=np.array(rate_mats) if rate_mats
        else np.zeros((0, 6, 6)),
        min_h_w=np.array(min_hw),
        min_h_r=np.array(min_hr),
        tangential_residual=np.array(tang_res),
        v_t_norm=np.array(vt_norm),
        branch=branches)
    return SimResult(records=records, diagnostics=diags, config=cfg)
