"""Static figures rendered with the Agg backend (no display needed)."""

from __future__ import annotations

from collections import defaultdict

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .acoustics import FieldGrid


def _save(fig: Figure, path):
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120)


def field_figure(grid: FieldGrid, path, title: str = "", targets=()):
    """Heatmap of |p| over the sampled plane, axes in mm."""
    g = grid.spec
    u, v = grid.axes
    o = grid.origin
    u0, v0 = float(o @ u), float(o @ v)
    extent = [
        1e3 * (u0 - g.resolution / 2), 1e3 * (u0 + (g.n_u - 0.5) * g.resolution),
        1e3 * (v0 - g.resolution / 2), 1e3 * (v0 + (g.n_v - 0.5) * g.resolution),
    ]
    names = "xyz"
    fig = Figure(figsize=(5.5, 4.5))
    ax = fig.add_subplot()
    im = ax.imshow(np.abs(grid.samples), origin="lower", extent=extent, cmap="inferno", aspect="equal")
    fig.colorbar(im, ax=ax, label="|p| (Pa)")
    for t in targets:
        t = np.asarray(t, dtype=float)
        ax.plot(1e3 * (t @ u), 1e3 * (t @ v), "c+", ms=10)
    ax.set_xlabel(f"{names[int(np.argmax(np.abs(u)))]} (mm)")
    ax.set_ylabel(f"{names[int(np.argmax(np.abs(v)))]} (mm)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def scenario_figure(summary: dict, rows, path):
    """Per-bot position error and rendered pressure against time, phase changes marked."""
    err = defaultdict(list)
    press = defaultdict(list)
    for t, bot, e, _, p in rows:
        if e is not None:
            err[bot].append((t, max(100.0 * e, 1e-3)))  # floor keeps the log axis finite
        if p is not None:
            press[bot].append((t, p))
    fig = Figure(figsize=(8, 6))
    ax1, ax2 = fig.subplots(2, 1, sharex=True)
    for bot in sorted(err):
        a = np.array(err[bot])
        ax1.plot(a[:, 0], a[:, 1], lw=1, label=f"bot {bot}")
    for bot in sorted(press):
        a = np.array(press[bot])
        ax2.plot(a[:, 0], a[:, 1], lw=1, label=f"bot {bot}")
    for ax in (ax1, ax2):
        for tr in summary.get("transitions", []):
            ax.axvline(tr["t"], color="0.6", ls="--", lw=0.8)
    for step in summary.get("schedule", []):
        if step["step"] == "dispense":
            ax2.axvline(step["t"], color="tab:red", ls=":", lw=1)
    ax1.set_ylabel("station error (cm)")
    ax1.set_yscale("log")
    ax2.set_ylabel("|p| at target (Pa)")
    ax2.set_xlabel("t (s)")
    if err:
        ax1.legend(loc="upper right", fontsize=8)
    ax1.set_title(f"{summary.get('scenario', '')}: {summary.get('verdict', {}).get('reason', '')}")
    fig.tight_layout()
    _save(fig, path)
