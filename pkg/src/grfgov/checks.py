"""Self-contained property suites behind the `check` CLI subcommand.

Each suite returns (ok, lines).  Randomness is internally seeded so runs
are fully deterministic; there is deliberately no seed option.
"""
from __future__ import annotations

import math

import numpy as np

from .constraints import (ConstraintParams, ReferenceVector, fd_jacobian,
                          linearize)
from .contact import (GroundParams, LegTether, normal_force,
                      replay_through_contact)
from .control import TrackingGains
from .governor import ErgRates, erg_step, lyapunov, nullspace_basis
from .rom import (PendulumState, ThrusterCommand, cartesian_from_vlip, grf,
                  kkt_solve, rom_accel, solve_lambda)


def _random_gains(rng) -> TrackingGains:
    return TrackingGains(
        kp_t=rng.uniform(50.0, 800.0), kd_t=rng.uniform(5.0, 80.0),
        kp_r=rng.uniform(50.0, 800.0), kd_r=rng.uniform(5.0, 80.0),
        use_radial_projection=bool(rng.integers(2)),
        use_length_actuation=bool(rng.integers(2)))


def _random_state(rng, u=None) -> PendulumState:
    if u is None:
        u = rng.uniform(-0.3, 0.3, 3)
        u[2] = rng.uniform(-0.05, 0.05)
    theta = rng.uniform(0.05, 1.0)
    phi = rng.uniform(-math.pi, math.pi)
    l = rng.uniform(0.3, 0.8)
    c, _ = cartesian_from_vlip([theta, phi, l, 0, 0, 0], u)
    return PendulumState(c=c, c_dot=rng.uniform(-1.0, 1.0, 3), u=u,
                         m=rng.uniform(2.0, 8.0), g=9.81)


def _random_ref(rng, chart: str, state: PendulumState) -> ReferenceVector:
    theta = rng.uniform(0.1, 1.1)
    phi = rng.uniform(-math.pi, math.pi)
    l = rng.uniform(0.3, 0.8)
    rates = rng.uniform(-2.0, 2.0, 3)
    vals = np.array([theta, phi, l, *rates])
    if chart == "vlip":
        return ReferenceVector("vlip", vals)
    c_t, c_t_dot = cartesian_from_vlip(vals, state.u)
    return ReferenceVector("cartesian", np.concatenate([c_t, c_t_dot]))


def run_jacobian_suite():
    """Analytic constraint Jacobian vs frozen-sign central differences."""
    rng = np.random.default_rng(20240613)
    lines = []
    ok = True
    params = ConstraintParams(mu_s=0.45, f_min=20.0,
                              theta_min=math.radians(5.0),
                              include_angle=True)
    for chart in ("cartesian", "vlip"):
        worst = 0.0
        n_done = 0
        while n_done < 100:
            state = _random_state(rng)
            gains = _random_gains(rng)
            ref0 = _random_ref(rng, chart, state)
            # skip samples near a friction-sign switch
            hyp_c, hyp_cd = ref0.to_cartesian(state)
            from .constraints import _hypothetical_grf
            _, _, u_g = _hypothetical_grf(state, hyp_c, hyp_cd, gains)
            if min(abs(u_g[0]), abs(u_g[1])) < 1e-6:
                continue
            lin = linearize(state, ref0, gains, params)
            J_fd = fd_jacobian(state, ref0, gains, params, step=1e-6)
            scale = max(1.0, float(np.max(np.abs(lin.J_r))))
            rel = float(np.max(np.abs(lin.J_r - J_fd))) / scale
            worst = max(worst, rel)
            n_done += 1
        passed = worst <= 1e-6
        ok &= passed
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {chart} chart: "
                     f"max relative Jacobian error {worst:.3e} over 100 "
                     f"samples (tol 1e-6)")
    return ok, lines


def run_lyapunov_suite():
    """Governor descent, exact centered-difference rate, nullspace."""
    rng = np.random.default_rng(77)
    lines = []
    ok = True
    rates = ErgRates(1.0, 5.0, 2.0)
    dt = 1e-3

    worst_vdot = -np.inf
    worst_fd = 0.0
    worst_leak = 0.0
    push_ok = True
    for _ in range(300):
        n_c = int(rng.integers(2, 5))
        J_r = rng.normal(size=(n_c, 6))
        d = rng.normal(size=6)
        x_w = rng.normal(size=6)
        x_r = x_w + d
        quadrant = rng.integers(3)
        h_w = rng.uniform(0.05, 1.0, n_c)
        h_r = rng.uniform(0.05, 1.0, n_c)
        if quadrant == 1:
            h_r[rng.integers(n_c)] = -rng.uniform(0.05, 1.0)
        elif quadrant == 2:
            h_w[rng.integers(n_c)] = -rng.uniform(0.05, 1.0)
        gov = erg_step(x_w, x_r, h_r, h_w, J_r, rates, dt)
        V, V_dot, _ = lyapunov(gov)
        worst_vdot = max(worst_vdot, V_dot)
        if V_dot != 0.0:
            A = gov.rate_matrix
            step = dt * (A @ gov.d_pre)
            d_p = gov.d_pre - step
            d_m = gov.d_pre + step
            fd = (float(d_p @ d_p) - float(d_m @ d_m)) / (2.0 * dt)
            worst_fd = max(worst_fd, abs(fd - V_dot) / max(1e-30,
                                                           abs(V_dot)))
        if gov.last_branch == "tangential":
            worst_leak = max(worst_leak, gov.tangential_residual
                             / max(1.0, gov.v_t_norm))

    for _ in range(200):
        n_c = int(rng.integers(2, 5))
        J_r = rng.normal(size=(n_c, 6))
        d = rng.normal(size=6)
        x_w = rng.normal(size=6)
        h_w = rng.uniform(0.05, 1.0, n_c)
        h_r = rng.uniform(0.05, 1.0, n_c)
        k = int(rng.integers(n_c))
        h_w[k] = -rng.uniform(0.5, 1.0)
        h_r[k] = h_w[k] + rng.uniform(0.0, 0.4)
        h_w[(k + 1) % n_c] = min(h_w[(k + 1) % n_c], -0.01)
        h_r[(k + 1) % n_c] = min(h_r[(k + 1) % n_c], -0.01)
        k_min = int(np.argmin(h_w))
        gov = erg_step(x_w, x_w + d, h_r, h_w, J_r, rates, dt)
        if gov.last_branch in ("normal-push", "normal-pull"):
            if h_r[k_min] >= h_w[k_min] and float(J_r[k_min] @ d) >= 0.0:
                dh = float(J_r[k_min] @ (gov.x_w - gov.x_w_pre))
                push_ok &= dh >= -1e-12

    checks = [
        ("feasible-quadrant descent: max V_dot "
         f"{worst_vdot:.3e} (tol 1e-12)", worst_vdot <= 1e-12),
        (f"centered-difference rate match: max rel {worst_fd:.3e} "
         "(tol 1e-6)", worst_fd <= 1e-6),
        (f"tangential nullspace leak: max {worst_leak:.3e} (tol 1e-9)",
         worst_leak <= 1e-9),
        ("push branch raises the most-violated row to first order",
         push_ok),
    ]

    N = nullspace_basis(np.array([[1.0, 0.0, 0.0]]))
    hand = np.allclose(N @ N.T, np.diag([0.0, 1.0, 1.0]), atol=1e-12)
    alpha_r, alpha_t = rates.alpha_r, rates.alpha_t
    gov = erg_step(np.zeros(3), np.ones(3), np.array([-0.1]),
                   np.array([0.5]), np.array([[1.0, 0.0, 0.0]]),
                   rates, dt)
    want = dt * (alpha_r * np.ones(3) + alpha_t * np.array([0, 1.0, 1.0]))
    hand &= gov.last_branch == "tangential"
    hand &= np.allclose(gov.x_w, want, atol=1e-14)
    checks.append(("single coordinate row: update is "
                   "alpha_r*(1,1,1) + alpha_t*(0,1,1)", hand))

    gov = erg_step(np.ones(6), np.ones(6), np.array([-1.0, -0.2]),
                   np.array([-0.5, -0.1]), np.zeros((2, 6)), rates, dt)
    checks.append(("idle lock: both violated and zero gap leaves x_w",
                   gov.last_branch == "idle"
                   and np.array_equal(gov.x_w, np.ones(6))))

    for _ in range(100):
        k = int(rng.integers(1, 5))
        C = rng.normal(size=(k, 6))
        N = nullspace_basis(C)
        r = np.linalg.matrix_rank(C, tol=1e-9 * np.linalg.norm(C, 2))
        good = N.shape == (6, 6 - r)
        if N.shape[1]:
            good &= float(np.max(np.abs(C @ N))) <= 1e-10 * max(
                1.0, float(np.max(np.abs(C))))
            good &= float(np.max(np.abs(N.T @ N - np.eye(N.shape[1])))) \
                <= 1e-12
        if not good:
            checks.append(("nullspace basis properties", False))
            break
    else:
        checks.append(("nullspace basis properties (100 random C)", True))

    ok = True
    for label, passed in checks:
        ok &= passed
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {label}")
    return ok, lines


def run_oracle_suite():
    """Multiplier/GRF closed form vs dense KKT solve, plus ground checks."""
    rng = np.random.default_rng(4242)
    lines = []
    checks = []

    worst_static = 0.0
    for m, l in ((5.0, 0.6), (2.0, 0.3), (8.0, 1.1)):
        st = PendulumState(c=[0.0, 0.0, l], c_dot=np.zeros(3),
                           u=np.zeros(3), m=m, g=9.81)
        u_g = grf(st, solve_lambda(st, ThrusterCommand(np.zeros(3), 0.0)))
        worst_static = max(worst_static, float(np.max(np.abs(
            u_g - np.array([0.0, 0.0, m * 9.81])))))
    checks.append((f"static vertical GRF equals weight: max abs err "
                   f"{worst_static:.3e} (tol 1e-12)",
                   worst_static <= 1e-12))

    worst_kkt = 0.0
    for _ in range(1000):
        st = _random_state(rng)
        cmd = ThrusterCommand(rng.uniform(-50.0, 50.0, 3),
                              rng.uniform(-5.0, 5.0))
        exact = bool(rng.integers(2))
        lam = solve_lambda(st, cmd, exact)
        acc = rom_accel(st, cmd, exact)
        acc_k, lam_k = kkt_solve(st, cmd, exact)
        worst_kkt = max(worst_kkt, abs(lam - lam_k),
                        float(np.max(np.abs(acc - acc_k))))
    checks.append((f"closed form vs 4x4 KKT solve on 1000 instances: "
                   f"max abs err {worst_kkt:.3e} (tol 1e-10)",
                   worst_kkt <= 1e-10))

    m, l, g = 5.0, 0.6, 9.81
    st = PendulumState(c=[0.0, 0.0, l], c_dot=np.zeros(3), u=np.zeros(3),
                       m=m, g=g)
    rom_ugz = grf(st, solve_lambda(st, ThrusterCommand(np.zeros(3), 0)))[2]
    gp = GroundParams(mu_s=0.45, mu_c=0.405)
    tether = LegTether()
    cmds = [(np.zeros(3), 0.0)] * 1500
    ps = replay_through_contact(st.c, st.c_dot, st.u, cmds, m, g, tether,
                                gp, cmd_dt=1e-3, substeps=20)
    steady = normal_force(ps.foot[2], ps.foot_dot[2], gp)
    rel = abs(steady - rom_ugz) / rom_ugz
    checks.append((f"steady compliant normal force {steady:.3f} N vs "
                   f"rigid-model {rom_ugz:.3f} N: rel {rel:.4f} "
                   "(tol 0.02)", rel <= 0.02))

    ok = True
    for label, passed in checks:
        ok &= passed
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {label}")
    return ok, lines


SUITES = {
    "jacobian": run_jacobian_suite,
    "lyapunov": run_lyapunov_suite,
    "oracle": run_oracle_suite,
}
