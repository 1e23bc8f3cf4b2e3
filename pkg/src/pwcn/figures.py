"""Report figures rendered to PNG files next to the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")  # file output only, no display server

import matplotlib.pyplot as plt
import numpy as np

from .corpus import LABELS


def save_training_curves(path, log) -> None:
    """Loss on the left axis, test metrics on the right, one line each."""
    epochs = [row.epoch for row in log]
    fig, ax_loss = plt.subplots(figsize=(7, 4.2))
    ax_loss.plot(epochs, [row.train_loss for row in log], color="tab:red", label="train loss")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("summed train loss", color="tab:red")
    ax_loss.tick_params(axis="y", labelcolor="tab:red")

    ax_metric = ax_loss.twinx()
    ax_metric.plot(epochs, [row.test_accuracy for row in log],
                   color="tab:blue", label="test accuracy")
    ax_metric.plot(epochs, [row.test_macro_f1 for row in log],
                   color="tab:green", linestyle="--", label="test macro-F1")
    ax_metric.set_ylabel("test metric")
    ax_metric.set_ylim(0.0, 1.0)

    lines = ax_loss.get_lines() + ax_metric.get_lines()
    ax_metric.legend(lines, [ln.get_label() for ln in lines], loc="center right")
    ax_loss.set_title("Training progress")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_confusion_matrix(path, confusion: np.ndarray) -> None:
    """Row-gold, column-predicted heatmap with counts printed in each cell."""
    confusion = np.asarray(confusion, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(confusion, cmap="Blues")
    ax.set_xticks(range(len(LABELS)), labels=LABELS)
    ax.set_yticks(range(len(LABELS)), labels=LABELS)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    threshold = confusion.max() / 2.0 if confusion.max() > 0 else 0.5
    for i in range(confusion.shape[0]):
        for j in range(confusion.shape[1]):
            color = "white" if confusion[i, j] > threshold else "black"
            ax.text(j, i, f"{int(confusion[i, j])}", ha="center", va="center", color=color)
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title("Confusion matrix")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_proximity_heatmap(path, tokens: list[str], prox: np.ndarray,
                           aspect_start: int, aspect_len: int) -> None:
    """One row of cells, shaded by proximity weight, aspect outlined."""
    prox = np.asarray(prox, dtype=np.float64)
    n = len(tokens)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * n), 1.8))
    im = ax.imshow(prox[None, :], cmap="Greens", vmin=0.0,
                   vmax=max(prox.max(), 1e-12), aspect="auto")
    ax.set_yticks([])
    ax.set_xticks(range(n), labels=tokens, rotation=45, ha="right")
    for i in range(aspect_start, aspect_start + aspect_len):
        ax.add_patch(plt.Rectangle((i - 0.5, -0.5), 1.0, 1.0, fill=False,
                                   edgecolor="tab:orange", linewidth=2.0))
    fig.colorbar(im, ax=ax, shrink=0.9, label="proximity weight")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
