"""Per-step telemetry records, CSV round-tripping, and SVG plots.

Floats are serialized with repr() so a written CSV re-parses to exactly
the original values and identical runs produce byte-identical files.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class TelemetryRecord:
    """One simulation step of logged quantities."""

    t: float
    c: np.ndarray
    c_dot: np.ndarray
    theta: float
    phi: float
    l: float
    x_r: np.ndarray
    x_w: np.ndarray
    u_tc: np.ndarray
    u_r: float
    lam: float
    u_g: np.ndarray
    h_r: np.ndarray
    h_w: np.ndarray
    V: float
    V_dot: float
    branch: str


def csv_header(n_c: int, n_x: int = 6) -> str:
    cols = ["t", "cx", "cy", "cz", "cdx", "cdy", "cdz",
            "theta", "phi", "l"]
    cols += [f"xr_{i}" for i in range(n_x)]
    cols += [f"xw_{i}" for i in range(n_x)]
    cols += ["utc_x", "utc_y", "utc_z", "ur", "lambda",
             "ugx", "ugy", "ugz"]
    cols += [f"hr_{i}" for i in range(n_c)]
    cols += [f"hw_{i}" for i in range(n_c)]
    cols += ["V", "Vdot", "branch"]
    return ",".join(cols)


def _row_values(rec: TelemetryRecord):
    vals = [rec.t, *rec.c, *rec.c_dot, rec.theta, rec.phi, rec.l,
            *rec.x_r, *rec.x_w, *rec.u_tc, rec.u_r, rec.lam, *rec.u_g,
            *rec.h_r, *rec.h_w, rec.V, rec.V_dot]
    return [repr(float(v)) for v in vals] + [rec.branch]


def export_csv(records, path, n_c: int = None) -> None:
    """Write records to CSV with the fixed column layout."""
    if records:
        n_c = len(records[0].h_r)
    elif n_c is None:
        n_c = 4
    lines = [csv_header(n_c)]
    lines += [",".join(_row_values(r)) for r in records]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Parse a telemetry CSV back into TelemetryRecord objects."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    n_c = sum(1 for col in header if col.startswith("hr_"))
    n_x = sum(1 for col in header if col.startswith("xr_"))
    if header != csv_header(n_c, n_x).split(","):
        raise ValueError(f"unrecognized CSV header in {path}")
    records = []
    for ln in lines[1:]:
        parts = ln.split(",")
        vals = [float(v) for v in parts[:-1]]
        i = 0

        def take(n):
            nonlocal i
            out = vals[i:i + n]
            i += n
            return out

        t = take(1)[0]
        c = np.array(take(3))
        c_dot = np.array(take(3))
        theta, phi, l = take(3)
        x_r = np.array(take(n_x))
        x_w = np.array(take(n_x))
        u_tc = np.array(take(3))
        u_r = take(1)[0]
        lam = take(1)[0]
        u_g = np.array(take(3))
        h_r = np.array(take(n_c))
        h_w = np.array(take(n_c))
        V, V_dot = take(2)
        records.append(TelemetryRecord(t=t, c=c, c_dot=c_dot, theta=theta,
                                       phi=phi, l=l, x_r=x_r, x_w=x_w,
                                       u_tc=u_tc, u_r=u_r, lam=lam, u_g=u_g,
                                       h_r=h_r, h_w=h_w, V=V, V_dot=V_dot,
                                       branch=parts[-1]))
    return records


def emit_plots(records, prefix, mu_s: float = None):
    """Render grouped line charts (states, GRF, constraints, Lyapunov).

    Returns the list of SVG paths written.  When mu_s is given the GRF
    chart overlays the friction-cone bounds +-mu_s * u_gz.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not records:
        raise ValueError("no records to plot")
    t = np.array([r.t for r in records])
    paths = []

    def save(fig, kind):
        path = f"{prefix}_{kind}.svg"
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)

    fig, axes = plt.subplots(3, 1, figsize=(7, 7), sharex=True)
    for ax, sym, vals in zip(
            axes, ("tilt [rad]", "heading [rad]", "length [m]"),
            ([r.theta for r in records], [r.phi for r in records],
             [r.l for r in records])):
        ax.plot(t, vals, lw=1.0)
        ax.set_ylabel(sym)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("t [s]")
    axes[0].set_title("leg state")
    save(fig, "states")

    u_g = np.array([r.u_g for r in records])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(t, u_g[:, 0], label="ugx", lw=1.0)
    ax.plot(t, u_g[:, 1], label="ugy", lw=1.0)
    ax.plot(t, u_g[:, 2], label="ugz", lw=1.0)
    if mu_s is not None:
        bound = mu_s * u_g[:, 2]
        ax.plot(t, bound, "k--", lw=0.8, label="+mu_s*ugz")
        ax.plot(t, -bound, "k--", lw=0.8, label="-mu_s*ugz")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("force [N]")
    ax.set_title("ground reaction force")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    save(fig, "grf")

    h_w = np.array([r.h_w for r in records])
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(h_w.shape[1]):
        ax.plot(t, h_w[:, i], label=f"hw_{i}", lw=1.0)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("constraint value")
    ax.set_title("constraints at applied reference")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    save(fig, "constraints")

    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    axes[0].plot(t, [r.V for r in records], lw=1.0)
    axes[0].set_ylabel("V")
    axes[1].plot(t, [r.V_dot for r in records], lw=1.0)
    axes[1].set_ylabel("dV/dt")
    axes[1].set_xlabel("t [s]")
    axes[0].set_title("governor tracking energy")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    save(fig, "lyapunov")
    return paths
