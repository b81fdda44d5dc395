"""SVG frontier plots.  Presentation only; nothing here feeds back into results."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_region_svg(curves, path) -> None:
    """Plot one staircase per ``(label, RegionEstimate)`` pair, with provenance points."""
    plt.rcParams["svg.hashsalt"] = "skregion"
    fig, ax = plt.subplots(figsize=(5, 4))
    for label, est in curves:
        front = est.region.frontier
        xs = [p[0] for p in front]
        ys = [p[1] for p in front]
        line, = ax.plot(xs, ys, "-", label=label)
        pts = [p for p, _ in est.schemes_on_frontier]
        if pts:
            ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=12, color=line.get_color())
    ax.set_xlabel("R1 (bits/use)")
    ax.set_ylabel("R2 (bits/use)")
    ax.set_xlim(left=0)
    ax.set_ylim(bottom=0)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
