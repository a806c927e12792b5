"""SVG figures for the experiment outputs (needs matplotlib)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .vqe import rolling_mean  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def scatter_plot(path: Path, rows, fit, p: float) -> Path:
    """Noisy and corrected per-site energy against the exact one."""
    exact = np.array([r[6] for r in rows])
    noisy = np.array([r[7] for r in rows])
    corrected = np.array([r[8] for r in rows])
    flo = np.array([bool(r[2]) for r in rows])
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    lo, hi = exact.min() - 0.1, exact.max() + 0.1
    ax.plot([lo, hi], [lo, hi], color="0.6", lw=1)
    ax.scatter(exact[~flo], noisy[~flo], s=12, label="noisy", color="tab:red")
    ax.scatter(exact[~flo], corrected[~flo], s=12, label="corrected", color="tab:blue")
    ax.scatter(exact[flo], noisy[flo], s=20, marker="x", label="FLO training", color="k")
    ax.set_xlabel("exact energy per site")
    ax.set_ylabel("estimated energy per site")
    ax.set_title(f"p = {p:g}, a = {fit.a:.3f}, b = {fit.b:.3f}")
    ax.legend(fontsize=8)
    return _save(fig, path)


def vqe_plot(path: Path, traces: dict) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (mode, ts) in enumerate(traces.items()):
        for j, t in enumerate(ts):
            ax.plot(rolling_mean(t.error, 5), color=f"C{i}", lw=1, alpha=0.8, label=mode if j == 0 else None)
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel("error per site (rolling mean of 5)")
    ax.legend(fontsize=8)
    return _save(fig, path)


def heatmap_plot(path: Path, grid, corrected: dict, exact, diffs: dict, n_sites: int) -> Path:
    panels = {"exact": exact, **corrected}
    fig, axes = plt.subplots(1, len(panels), figsize=(3 * len(panels), 3), sharey=True)
    lo = min(np.nanmin(v) for v in panels.values()) / n_sites
    hi = max(np.nanmax(v) for v in panels.values()) / n_sites
    extent = [grid[0], grid[-1], grid[0], grid[-1]]
    for ax, (name, values) in zip(axes, panels.items()):
        im = ax.imshow(values / n_sites, origin="lower", extent=extent, vmin=lo, vmax=hi, aspect="equal")
        title = name if name == "exact" else f"{name}\n{diffs[name]:.4f}"
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("theta")
    axes[0].set_ylabel("phi")
    fig.colorbar(im, ax=list(axes), shrink=0.8)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path
