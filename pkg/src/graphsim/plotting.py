"""Report figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
    "figure.dpi": 120,
}


def _save(fig, path: str | os.PathLike) -> str:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return str(path)


def plot_training_curves(rows: Sequence[dict], path: str | os.PathLike, title: str = "") -> str:
    """Loss and evaluation metrics against training step."""
    steps = np.array([r["step"] for r in rows])
    with plt.rc_context(STYLE):
        fig, (ax_loss, ax_metric) = plt.subplots(1, 2, figsize=(8, 3))
        ax_loss.plot(steps, [r["loss"] for r in rows], color="0.2")
        ax_loss.set_xlabel("step")
        ax_loss.set_ylabel("mean training loss")
        ax_metric.plot(steps, [r["pair_auc"] for r in rows], label="pair AUC")
        ax_metric.plot(steps, [r["triplet_acc"] for r in rows], label="triplet accuracy")
        ax_metric.set_xlabel("step")
        ax_metric.set_ylim(0.0, 1.0)
        ax_metric.legend(loc="lower right", frameon=False)
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def plot_score_distributions(scores: np.ndarray, labels: Sequence[int], path: str | os.PathLike,
                             title: str = "") -> str:
    """Histograms of pair scores for positive and negative pairs."""
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    bins = np.linspace(scores.min(), scores.max(), 40) if scores.size and np.ptp(scores) > 0 else 10
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ax.hist(scores[labels == 1], bins=bins, alpha=0.6, label="positive")
        ax.hist(scores[labels == -1], bins=bins, alpha=0.6, label="negative")
        ax.set_xlabel("similarity")
        ax.set_ylabel("pairs")
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_attention(attention: list[dict[str, np.ndarray]], path: str | os.PathLike) -> str:
    """Heatmap grid: one row per propagation step, one column per direction.

    Each panel has its own colour scale, since early-step weights are often
    close to uniform.
    """
    steps = len(attention)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(steps, 2, figsize=(7.5, 2.6 * steps), squeeze=False)
        for t, record in enumerate(attention):
            for col, direction in enumerate(("1->2", "2->1")):
                ax = axes[t, col]
                m = np.asarray(record[direction])
                im = ax.imshow(m, vmin=0.0, vmax=max(float(m.max()), 1e-12), cmap="Greens",
                               aspect="auto", interpolation="nearest")
                fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
                src, dst = ("G1", "G2") if direction == "1->2" else ("G2", "G1")
                ax.set_title(f"step {t + 1}: {src} attends to {dst}")
                ax.set_ylabel(f"{src} node")
                ax.set_xlabel(f"{dst} node")
        return _save(fig, path)


def plot_wl_sweep(rows: Sequence[dict], path: str | os.PathLike) -> str:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ts = [r["T"] for r in rows]
        ax.plot(ts, [r["pair_auc"] for r in rows], marker="o", label="pair AUC")
        ax.plot(ts, [r["triplet_acc"] for r in rows], marker="s", label="triplet accuracy")
        ax.set_xlabel("WL iterations T")
        ax.set_xticks(ts)
        ax.legend(frameon=False)
        return _save(fig, path)
