"""Per-epoch metric curves rendered to standalone SVG files."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

METRIC_KEYS = ("accuracy", "precision", "recall", "f1", "loss")


def plot_metric_curves(rows, out_dir):
    """rows: (epoch, split, metrics dict) triples from the training loop.

    Writes one SVG per metric; returns the file paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    by_split = {}
    for epoch, split_name, m in rows:
        by_split.setdefault(split_name, []).append((epoch, m))
    paths = []
    for key in METRIC_KEYS:
        fig, ax = plt.subplots(figsize=(6, 4))
        for split_name, series in sorted(by_split.items()):
            epochs = [e for e, _ in series]
            values = [m[key] for _, m in series]
            ax.plot(epochs, values, label=split_name)
        ax.set_xlabel("epoch")
        ax.set_ylabel(key)
        ax.legend()
        fig.tight_layout()
        path = os.path.join(out_dir, f"{key}.svg")
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths
