"""Figure rendering for the report-style outputs.

Figures are written to files next to the delimited outputs; no
interactive backend is required (Agg is forced on import).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .perfcluster import Category
from .report import METRIC_TITLES

CATEGORY_COLORS = {
    Category.HIGH: "tab:green",
    Category.MEDIUM: "tab:blue",
    Category.LOW: "tab:orange",
    Category.FAIL: "tab:red",
}


def save_cluster_figure(observations, clustering, path) -> None:
    """Scatter of (loss rate, normalized error) colored by category."""
    fig, ax = plt.subplots(figsize=(6, 5))
    pts = np.array([obs.point for obs in observations])
    assign = np.array(clustering.assignment)
    categories = clustering.categories or {}
    for cluster in range(clustering.k):
        mask = assign == cluster
        if not mask.any():
            continue
        category = categories.get(cluster)
        label = category.value if category else f"cluster {cluster}"
        color = CATEGORY_COLORS.get(category)
        ax.scatter(pts[mask, 0], pts[mask, 1], s=18, alpha=0.6, label=label, color=color)
    cents = np.array(clustering.centroids)
    ax.scatter(cents[:, 0], cents[:, 1], marker="x", s=120, c="black", label="centroids")
    ax.set_xlabel("track loss rate")
    ax.set_ylabel("normalized error")
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="best", fontsize=8)
    ax.set_title("run outcomes")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_profile_figure(profile, path) -> None:
    """Horizontal bars of mean per-component time (ms) over tracked frames."""
    names = sorted(profile)
    means_ms = [profile[n].mean_s * 1e3 for n in names]
    fig, ax = plt.subplots(figsize=(6, 0.6 * len(names) + 1.5))
    ax.barh(names, means_ms, color="tab:blue")
    ax.set_xlabel("mean time per tracked frame (ms)")
    ax.set_title("component time profile")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_report_figure(table, path) -> None:
    """Grouped bars: per-sequence mean error for each algorithm."""
    sequences = list(table.sequences)
    algorithms = list(table.algorithms)
    x = np.arange(len(sequences))
    width = 0.8 / max(len(algorithms), 1)
    fig, ax = plt.subplots(figsize=(max(6, 1.1 * len(sequences)), 4.5))
    for a, alg in enumerate(algorithms):
        values = []
        for seq in sequences:
            cell = table.cells.get((seq, alg))
            values.append(cell.mean if cell and cell.mean is not None else np.nan)
        ax.bar(x + a * width, values, width, label=alg)
    ax.set_xticks(x + 0.4 - width / 2)
    ax.set_xticklabels(sequences, rotation=30, ha="right", fontsize=8)
    ax.set_yscale("log")
    ax.set_ylabel(METRIC_TITLES[table.metric] + ", mean over successes")
    ax.set_title(f"{METRIC_TITLES[table.metric]} — {table.speed}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
