"""Figures for stage reports (rendered to files, never shown)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_trend(rows, path, title: str = "stage coverage"):
    """Plot fraction columns against step count.

    ``rows`` is a list of dicts with a ``steps`` key and one numeric key
    per series; every other key is drawn as a line.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to plot")
    series = [k for k in rows[0] if k != "steps"]
    xs = [r["steps"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for name in series:
        ax.plot(xs, [r[name] for r in rows], marker="o", label=name)
    ax.set_xlabel("steps")
    ax.set_ylabel("fraction realized")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    # dropping the version stamp keeps renders identical across matplotlib builds
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)
    return path
