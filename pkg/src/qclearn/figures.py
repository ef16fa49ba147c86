"""Matplotlib renderers for the delimited run outputs.

Each renderer reads the already-written CSV file and saves a PNG next to it,
so the figures always show exactly the exported data.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

__all__ = [
    "render_convergence",
    "render_populations",
    "render_bures",
    "render_compare",
]


def _read_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.size == 0:
        return None
    return np.atleast_1d(data)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def render_convergence(png_path, csv_path):
    """Loss and gradient norm against the iteration count."""
    data = _read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if data is not None:
        ax.semilogy(data["iter"], data["loss"], color="tab:blue", label="loss")
        positive = data["grad_norm"] > 0
        if positive.any():
            ax.semilogy(
                data["iter"][positive],
                data["grad_norm"][positive],
                color="tab:orange",
                alpha=0.7,
                label="gradient norm",
            )
        ax.legend()
    else:
        ax.text(0.5, 0.5, "no optimization performed", ha="center", va="center")
    ax.set_xlabel("iteration")
    ax.set_ylabel("value")
    ax.set_title("training convergence")
    _save(fig, png_path)


def render_populations(png_path, csv_path):
    """Exact versus extrapolated basis populations of the showcase state."""
    data = _read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if data is not None:
        indices = np.unique(data["state_index"].astype(int))
        colors = plt.cm.tab10(np.linspace(0, 1, max(len(indices), 2)))
        for color, idx in zip(colors, indices):
            rows = data[data["state_index"].astype(int) == idx]
            ax.plot(rows["t"], rows["exact"], color=color, label=f"basis {idx} exact")
            ax.plot(
                rows["t"],
                rows["approx"],
                color=color,
                linestyle="none",
                marker="o",
                markersize=4,
                label=f"basis {idx} learned",
            )
        ax.legend(fontsize=7, ncol=2)
    ax.set_xlabel("time")
    ax.set_ylabel("population")
    ax.set_title("extrapolated basis populations")
    _save(fig, png_path)


def render_bures(png_path, csv_path):
    """Mean Bures distance per extrapolation step with a min-max band."""
    data = _read_csv(csv_path)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if data is not None:
        ax.fill_between(data["step"], data["min"], data["max"], alpha=0.25, color="tab:blue")
        ax.semilogy(data["step"], data["mean_bures"], color="tab:blue", marker="o")
    ax.set_xlabel("extrapolation step")
    ax.set_ylabel("Bures distance")
    ax.set_title("held-out extrapolation error")
    _save(fig, png_path)


def render_compare(png_path, curves):
    """Per-method mean Bures curves; bands span the seeds of each method."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    colors = {"gate": "tab:blue", "stochastic_gate": "tab:orange", "pulse": "tab:green"}
    for method, method_curves in curves.items():
        if not method_curves:
            continue
        steps = method_curves[0].steps
        means = np.array([c.mean for c in method_curves])
        color = colors.get(method, None)
        ax.semilogy(steps, means.mean(axis=0), marker="o", color=color, label=method)
        if len(method_curves) > 1:
            ax.fill_between(
                steps, means.min(axis=0), means.max(axis=0), alpha=0.2, color=color
            )
    ax.set_xlabel("extrapolation step")
    ax.set_ylabel("mean Bures distance")
    ax.set_title("methods under a matched measurement budget")
    ax.legend()
    _save(fig, png_path)
