"""Static figures for the CLI (written to files, never shown)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .model import Provenance  # noqa: E402


def plot_ksweep(rows, path, title: str | None = None) -> None:
    """Objective and TA against the forced cluster count; rows are (offset, k, objective, TA)."""
    ks = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(ks, [r[2] for r in rows], "o-", color="tab:blue", label="objective")
    ax.set_xlabel("number of clusters k")
    ax.set_ylabel("objective", color="tab:blue")
    sel = [r for r in rows if r[0] == 0]
    if sel:
        ax.axvline(sel[0][1], color="0.6", ls=":", lw=1)
    if any(r[3] is not None for r in rows):
        ax2 = ax.twinx()
        ax2.plot(ks, [r[3] for r in rows], "s--", color="tab:red", label="TA")
        ax2.set_ylabel("TA", color="tab:red")
        ax2.set_ylim(min(0.0, min(r[3] for r in rows)) - 0.05, 1.05)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_trajectories(trajectories, path, gt=None, canvas=None) -> None:
    """Image-plane paths; interpolated/extrapolated stretches are dotted."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for t in gt or ():
        xs = [b.center[0] for b in t.boxes]
        ys = [b.center[1] for b in t.boxes]
        ax.plot(xs, ys, color="0.8", lw=4, zorder=1)
    cmap = plt.get_cmap("tab10")
    for n, t in enumerate(trajectories):
        c = cmap(n % 10)
        boxes = list(t.boxes)
        for a, b in zip(boxes, boxes[1:]):
            filled = b.provenance is not Provenance.DETECTED or a.provenance is not Provenance.DETECTED
            ax.plot([a.center[0], b.center[0]], [a.center[1], b.center[1]], color=c,
                    ls=":" if filled else "-", lw=1.5, zorder=2)
        ax.annotate(str(t.id), boxes[0].center, color=c, fontsize=8)
    if canvas:
        ax.set_xlim(0, canvas[0])
        ax.set_ylim(canvas[1], 0)
    else:
        ax.invert_yaxis()
    ax.set_xlabel("x [px]")
    ax.set_ylabel("y [px]")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
