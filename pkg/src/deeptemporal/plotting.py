"""Figures written next to the benchmark report."""

from __future__ import annotations

from pathlib import Path

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
}

# no timestamp or version metadata, so reruns produce identical files
_PNG_METADATA = {"Software": None}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_PNG_METADATA, bbox_inches="tight")
    plt.close(fig)
    return path


def accuracy_bars(reports, path) -> Path:
    """Grouped bars: one group per configuration, one bar per spec, std as error bars."""
    names = []
    for rep in reports:
        for cfg in rep.configs:
            if cfg.name not in names:
                names.append(cfg.name)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.3 * len(names)), 3.0))
        width = 0.8 / max(len(reports), 1)
        x = np.arange(len(names))
        for k, rep in enumerate(reports):
            means, stds = [], []
            for name in names:
                accs = rep.accuracies(name)
                means.append(100 * np.mean(accs) if accs else np.nan)
                stds.append(100 * np.std(accs) if accs else 0.0)
            ax.bar(x + (k - (len(reports) - 1) / 2) * width, means, width, yerr=stds, capsize=2,
                   label=rep.spec_name)
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=20, ha="right")
        ax.set_ylabel("test accuracy [%]")
        ax.set_ylim(0, 105)
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def loss_curves(report, path) -> Path:
    """Training loss per epoch, one line per (loss mode, seed)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        colors = {"many-to-many": "C0", "many-to-one": "C3"}
        labelled = set()
        for key, losses in report.histories.items():
            mode = key.split("/")[0]
            ax.plot(np.arange(1, len(losses) + 1), losses, color=colors.get(mode, "C7"), lw=0.8, alpha=0.8,
                    label=None if mode in labelled else mode)
            labelled.add(mode)
        ax.set_xlabel("epoch")
        ax.set_ylabel("training loss")
        ax.set_title(report.spec_name)
        if labelled:
            ax.legend(frameon=False)
        return _save(fig, Path(path))
