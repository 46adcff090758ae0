"""Optional PNG rendering of CLI tables (``--figures``); the CSV files stay authoritative."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _columns(table):
    header, rows = table
    return {name: [row[i] for row in rows] for i, name in enumerate(header)}


def _save(fig, out_dir: Path, name: str) -> str:
    target = out_dir / f"{name}.png"
    tmp = out_dir / f".{name}.png.tmp"
    fig.savefig(tmp, dpi=120, bbox_inches="tight", format="png")
    plt.close(fig)
    tmp.replace(target)
    return target.name


def _ideal_tau(tables, out_dir):
    cols = _columns(tables["ideal_tau"])
    theta, rho = np.array(cols["theta"]), np.array(cols["rho"])
    ratio = np.array(cols["tau_over_theta"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for r in np.unique(rho):
        sel = rho == r
        ax.plot(theta[sel], ratio[sel], marker=".", label=f"rho={r:.3g}")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$\tau/\theta$")
    ax.legend(fontsize=7)
    return [_save(fig, out_dir, "ideal_tau")]


def _tau_field(tables, out_dir):
    cols = _columns(tables["tau_field"])
    theta, rho = np.array(cols["theta"]), np.array(cols["rho"])
    tau = np.array(cols["tau"])
    th_u, rh_u = np.unique(theta), np.unique(rho)
    grid = tau.reshape(th_u.size, rh_u.size) / th_u[:, None]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    mesh = ax.pcolormesh(rh_u, th_u, grid, shading="nearest")
    fig.colorbar(mesh, ax=ax, label=r"$\tau/\theta$")
    ax.set_xlabel(r"$\rho$")
    ax.set_ylabel(r"$\theta$")
    return [_save(fig, out_dir, "tau_field")]


def _condensate(tables, out_dir):
    cols = _columns(tables["condensate_scan"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(cols["theta"], cols["tau"], marker=".")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$\tau$ (ideal)")
    ax.set_title("EXPERIMENTAL", fontsize=8)
    return [_save(fig, out_dir, "condensate_scan")]


def _gk(tables, out_dir):
    cols = _columns(tables["gk"])
    stats, order = np.array(cols["statistics"]), np.array(cols["order"])
    alpha, g = np.array(cols["alpha"]), np.array(cols["G_quadrature"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for st in np.unique(stats):
        for k in np.unique(order):
            sel = (stats == st) & (order == k)
            ax.semilogy(alpha[sel], g[sel], label=f"{st} G_{k}")
    ax.set_xlabel(r"$\alpha$")
    ax.legend(fontsize=7)
    return [_save(fig, out_dir, "gk")]


def _validate(tables, out_dir):
    cols = _columns(tables["validate"])
    values = np.abs(np.array(cols["value"], dtype=float))
    thresholds = np.array(cols["threshold"], dtype=float)
    y = np.arange(values.size)
    fig, ax = plt.subplots(figsize=(6, 0.35 * values.size + 1))
    ax.barh(y, np.log10(np.maximum(values, 1e-300)), color="0.6")
    ax.scatter(np.log10(thresholds), y, marker="|", color="k", s=200)
    ax.set_yticks(y, cols["check"], fontsize=7)
    ax.set_xlabel("log10 value (bar) and threshold (tick)")
    return [_save(fig, out_dir, "validate")]


_RENDERERS = {
    "ideal-tau": _ideal_tau,
    "tau-field": _tau_field,
    "condensate-scan": _condensate,
    "gk": _gk,
    "validate": _validate,
}


def render(command: str, tables: dict, out_dir) -> list:
    """Render the figures for ``command``; returns the written file names."""
    renderer = _RENDERERS.get(command)
    if renderer is None or not all(rows for _, rows in tables.values()):
        return []
    return renderer(tables, Path(out_dir))
