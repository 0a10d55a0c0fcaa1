"""Static figures for run and sweep reports (matplotlib, Agg backend)."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_MARKERS = ("s", "^", "D", "v", "o", "P")
_COLORS = ("black", "tab:blue", "tab:green", "tab:purple", "tab:orange", "tab:brown")


def _save(fig, path: Path):
    # fixed metadata keeps repeated renders identical
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def recovery_figure(truth: np.ndarray, estimates: Mapping[float, np.ndarray], sampler_names: Sequence[str],
                    path: Path | str, title: str = "") -> Path:
    """One panel per burst: ground-truth inner products against recovered values per step size."""
    path = Path(path)
    n_b, n_g = truth.shape
    fig, axes = plt.subplots(1, n_b, figsize=(3.2 * max(n_b, 1), 3.2), squeeze=False)
    xs = np.arange(n_g)
    for i, ax in enumerate(axes[0]):
        ax.plot(xs, truth[i], "o", mfc="none", mec="red", ms=10, label="ground truth")
        for k, (beta, est) in enumerate(sorted(estimates.items(), reverse=True)):
            ax.plot(xs, est[i], _MARKERS[k % len(_MARKERS)], color=_COLORS[k % len(_COLORS)],
                    ms=5, label=f"beta={beta:g}")
        ax.set_xticks(xs, list(sampler_names))
        ax.set_title(f"burst {i + 1}")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("<h, g>")
    axes[0][-1].legend(fontsize=7, loc="best")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path)
    return path


def sweep_figure(betas: Sequence[float], errors: Sequence[float], bounds: Sequence[float],
                 path: Path | str, title: str = "") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    order = np.argsort(betas)
    b = np.asarray(betas)[order]
    ax.loglog(b, np.asarray(errors)[order], "s-", color="black", label="max recovery error")
    ax.loglog(b, np.asarray(bounds)[order], "^--", color="tab:blue", label="max bound")
    ax.set_xlabel("beta")
    ax.set_ylabel("error")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
    return path
