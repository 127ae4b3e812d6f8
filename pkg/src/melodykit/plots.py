"""Matplotlib figures rendered next to the delimited/JSON outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

METRIC_NAMES = ("cmm", "lm", "centr")
METRIC_LABELS = {"cmm": "CMM", "lm": "LM", "centr": "CENTR"}


def plot_learning_curve(curve, path: str | Path, title: str = "") -> None:
    """Train/validation loss per epoch, saved as a PNG."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    epochs = [r.epoch for r in curve]
    ax.plot(epochs, [r.train_loss for r in curve], label="train")
    ax.plot(epochs, [r.val_loss for r in curve], label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("cross-entropy (nats)")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep_curves(curves: dict[str, list], path: str | Path, which: str = "train") -> None:
    """Overlay the training (or validation) curves of a unit sweep."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, curve in sorted(curves.items()):
        losses = [r.train_loss if which == "train" else r.val_loss for r in curve]
        ax.plot([r.epoch for r in curve], losses, label=label)
    ax.set_xlabel("epoch")
    ax.set_ylabel(f"{which} cross-entropy (nats)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_metric_distributions(triples, path: str | Path, title: str = "") -> None:
    """Histogram of each metric over a set of melodies."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    for ax, metric in zip(axes, METRIC_NAMES):
        values = [getattr(t, metric) for t in triples]
        ax.hist(values, bins=20, color="steelblue", edgecolor="black", alpha=0.8)
        ax.set_xlabel(METRIC_LABELS[metric])
    axes[0].set_ylabel("melodies")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_comparison(reports, path: str | Path) -> None:
    """Grouped bars of per-model metric means with std error bars."""
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    names = [r.name for r in reports]
    xs = range(len(reports))
    for ax, metric in zip(axes, METRIC_NAMES):
        means = [getattr(r.evaluation.stats.mean, metric) for r in reports]
        stds = [getattr(r.evaluation.stats.std, metric) for r in reports]
        ax.bar(xs, means, yerr=stds, capsize=3, color="steelblue", alpha=0.8)
        ax.set_xticks(list(xs))
        ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
        ax.set_title(METRIC_LABELS[metric])
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
