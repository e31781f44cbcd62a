"""Matplotlib figures written next to the text outputs of a run.

Figures are drawn on explicit ``Figure`` objects with the Agg canvas, so no
global backend state is touched.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from nlmfg.grid import Grid


def _save(fig: Figure, path: str | os.PathLike) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, metadata={"Software": None})


def snapshot_figure(slices: Sequence[np.ndarray], times: Sequence[float], grid: Grid,
                    path: str | os.PathLike, label: str = r"$\rho$") -> None:
    """One panel per time slice, shared color scale, x1 to the right and x2 up."""
    n = len(slices)
    fig = Figure(figsize=(3.2 * n + 0.8, 3.2))
    axes = fig.subplots(1, n, squeeze=False)[0]
    lo = min(float(np.min(s)) for s in slices)
    hi = max(float(np.max(s)) for s in slices)
    extent = (grid.x1_min, grid.x1_max, grid.x2_min, grid.x2_max)
    image = None
    for ax, field, t in zip(axes, slices, times):
        image = ax.imshow(np.asarray(field).T, origin="lower", extent=extent, vmin=lo, vmax=hi,
                          cmap="viridis", aspect="equal")
        ax.set_title(f"{label} at t = {t:g}")
        ax.set_xlabel("$x_1$")
    axes[0].set_ylabel("$x_2$")
    fig.colorbar(image, ax=list(axes), shrink=0.85)
    _save(fig, path)


def residual_figure(history: Sequence[dict], path: str | os.PathLike) -> None:
    """Residual histories on a log scale."""
    fig = Figure(figsize=(5.5, 3.6))
    ax = fig.subplots()
    iters = [row["iter"] for row in history]
    for key in ("continuity_res", "a_fixedpoint_res", "complementarity_res", "iterate_change"):
        values = np.array([row[key] for row in history], dtype=float)
        ax.semilogy(iters, np.where(values > 0, values, np.nan), label=key)
    ax.set_xlabel("iteration")
    ax.set_ylabel("residual")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)
