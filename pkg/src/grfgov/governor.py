"""Explicit reference governor over linearized constraint rows.

An applied reference x_w chases the desired reference x_r through one of
three velocity fields, switched on the signs of the constraint values at
the applied point (h_w) and at the desired point (h_r):

  both feasible          full-speed pursuit, alpha_r (x_r - x_w)
  only desired violated  pursuit restricted to the null space of the
                         violated constraint gradients
  applied violated       recovery along alpha_r (x_r - x_w) if the
                         desired point is feasible, else a push/pull
                         along the most-violated constraint gradient

The update is a single explicit Euler step per call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Constraint gradients shorter than this cannot define a push direction.
GRADIENT_TOL = 1e-12
# Tangential-branch velocities must lie in the violated rows' null space
# to this relative residual.
NULLSPACE_RESIDUAL_TOL = 1e-9


class DegenerateGradientError(RuntimeError):
    """Most-violated constraint row has a vanishing gradient."""


@dataclass
class ErgRates:
    """Pursuit, tangential, and normal-push rate gains [1/s]."""

    alpha_r: float
    alpha_t: float
    alpha_n: float

    def __post_init__(self):
        for name in ("alpha_r", "alpha_t", "alpha_n"):
            v = float(getattr(self, name))
            if not (v > 0.0) or not np.isfinite(v):
                raise ValueError(f"{name} must be positive and finite")
            setattr(self, name, v)


@dataclass
class GovernorState:
    """One governor step: the new applied reference plus diagnostics."""

    x_w: np.ndarray
    x_r: np.ndarray
    last_branch: str
    h_r: np.ndarray
    h_w: np.ndarray
    rate_matrix: np.ndarray
    x_w_pre: np.ndarray
    d_pre: np.ndarray
    tangential_residual: float = 0.0
    v_t_norm: float = 0.0


def nullspace_basis(C: np.ndarray) -> np.ndarray:
    """Orthonormal null-space basis of a row-stacked gradient matrix.

    Columns span null(C); SVD-based with tolerance 1e-9 * sigma_max.
    An empty C yields the identity.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2:
        raise ValueError("C must be 2-D")
    n = C.shape[1]
    if C.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(C)
    tol = 1e-9 * (s.max() if s.size else 0.0)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def erg_step(x_w: np.ndarray, x_r: np.ndarray, h_r: np.ndarray,
             h_w: np.ndarray, J_r: np.ndarray, rates: ErgRates,
             dt: float) -> GovernorState:
    """Advance the applied reference one explicit Euler step."""
    x_w = np.asarray(x_w, dtype=float).copy()
    x_r = np.asarray(x_r, dtype=float).copy()
    h_r = np.asarray(h_r, dtype=float)
    h_w = np.asarray(h_w, dtype=float)
    J_r = np.asarray(J_r, dtype=float)
    n = x_w.shape[0]
    d = x_r - x_w

    w_ok = float(np.min(h_w)) >= 0.0
    r_ok = float(np.min(h_r)) >= 0.0

    v_r = np.zeros(n)
    v_t = np.zeros(n)
    v_n = np.zeros(n)
    A = np.zeros((n, n))
    branch = None
    tangential_residual = 0.0
    v_t_norm = 0.0

    if w_ok or r_ok:
        v_r = rates.alpha_r * d
        A += rates.alpha_r * np.eye(n)

    if w_ok and r_ok:
        branch = "direct"
    elif w_ok and not r_ok:
        branch = "tangential"
        C_r = J_r[h_r < 0.0]
        N = nullspace_basis(C_r)
        NNt = N @ N.T
        v_t = rates.alpha_t * (NNt @ d)
        A += rates.alpha_t * NNt
        v_t_norm = float(np.linalg.norm(v_t))
        tangential_residual = float(np.linalg.norm(C_r @ v_t))
        if tangential_residual > NULLSPACE_RESIDUAL_TOL * max(1.0, v_t_norm):
            raise RuntimeError(
                "tangential velocity leaked out of the constraint null "
                f"space: residual {tangential_residual:.3e}")
    elif not w_ok and r_ok:
        branch = "direct"
    else:
        if not np.any(d):
            branch = "idle"
        else:
            k_min = int(np.argmin(h_w))
            row = J_r[k_min]
            norm = float(np.linalg.norm(row))
            if norm < GRADIENT_TOL:
                raise DegenerateGradientError(
                    f"constraint row {k_min} gradient norm {norm:.3e} "
                    "is below tolerance")
            r_k = row / norm
            sign = 1.0 if h_r[k_min] >= h_w[k_min] else -1.0
            P_k = np.outer(r_k, r_k)
            v_n = sign * rates.alpha_n * (P_k @ d)
            A += sign * rates.alpha_n * P_k
            branch = "normal-push" if sign > 0.0 else "normal-pull"

    stray = {
        "direct": np.any(v_t) or np.any(v_n),
        "tangential": bool(np.any(v_n)),
        "normal-push": np.any(v_r) or np.any(v_t),
        "normal-pull": np.any(v_r) or np.any(v_t),
        "idle": np.any(v_r) or np.any(v_t) or np.any(v_n),
    }[branch]
    if stray:
        raise RuntimeError("governor branch exclusivity violated")

    x_dot = v_r + v_t + v_n
    x_w_new = x_w + float(dt) * x_dot
    return GovernorState(x_w=x_w_new, x_r=x_r, last_branch=branch,
                         h_r=h_r.copy(), h_w=h_w.copy(), rate_matrix=A,
                         x_w_pre=x_w, d_pre=d,
                         tangential_residual=tangential_residual,
                         v_t_norm=v_t_norm)


def lyapunov(gov: GovernorState, diag_P=None):
    """Quadratic tracking energy of the applied reference and its rate.

    V = d^T P d with d the pre-update gap, and V_dot = -2 d^T P A d the
    exact rate along the governor field x_w_dot = A d.  Returns
    (V, V_dot, Q) with Q = P A.
    """
    d = gov.d_pre
    n = d.shape[0]
    P = np.eye(n) if diag_P is None else np.diag(np.asarray(diag_P, float))
    Q = P @ gov.rate_matrix
    V = float(d @ P @ d)
    V_dot = -2.0 * float(d @ Q @ d)
    return V, V_dot, Q
