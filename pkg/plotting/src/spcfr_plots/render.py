"""Convergence-figure rendering: one panel per game, one series per
algorithm/update-mode, residual on a log scale against iterations.

Rendering is deterministic: series are ordered by sorted label, colors come
from a fixed palette keyed by that order, and SVG output is stripped of
volatile metadata.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .traces import TraceFile, fitted_slope

PALETTE = (
    "#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#f39c12",
    "#16a085", "#7f8c8d", "#2c3e50", "#d35400", "#2980b9",
)
GUIDE_SLOPES = (-0.5, -0.75)

plt.rcParams["svg.hashsalt"] = "spcfr-plots"
plt.rcParams["svg.fonttype"] = "none"  # keep legend labels as searchable text


@dataclass
class Layout:
    out_dir: Path
    title: str | None = None
    guides: bool = False
    dpi: int = 150


@dataclass
class RenderedPanel:
    game: str
    labels: list[str]
    paths: list[Path] = field(default_factory=list)


def render(traces: list[TraceFile], layout: Layout) -> list[RenderedPanel]:
    """Write one SVG and one PNG per game panel; skips empty traces."""
    if not traces:
        raise ValueError("need at least one trace file")
    panels: dict[str, list[TraceFile]] = {}
    for trace in traces:
        if trace.t.size == 0:
            warnings.warn(f"{trace.path}: empty trace, panel series skipped")
            continue
        panels.setdefault(trace.game, []).append(trace)

    layout.out_dir.mkdir(parents=True, exist_ok=True)
    rendered: list[RenderedPanel] = []
    for game in sorted(panels):
        series = sorted(panels[game], key=lambda tr: tr.label)
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for i, trace in enumerate(series):
            keep = trace.residual > 0
            ax.plot(
                trace.t[keep], trace.residual[keep],
                color=PALETTE[i % len(PALETTE)], label=trace.label, linewidth=1.6,
            )
        if layout.guides:
            t_all = np.concatenate([tr.t for tr in series])
            r_all = np.concatenate([tr.residual for tr in series])
            anchor_t = max(t_all.min(), 1.0)
            anchor_r = float(r_all[r_all > 0].max()) if (r_all > 0).any() else 1.0
            ts = np.geomspace(anchor_t, t_all.max(), 64)
            for slope in GUIDE_SLOPES:
                ax.plot(
                    ts, anchor_r * (ts / anchor_t) ** slope,
                    linestyle="--", linewidth=0.9, color="#999999",
                    label=f"slope {slope:g}",
                )
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("iterations")
        ax.set_ylabel("saddle-point residual")
        ax.set_title(layout.title or game)
        ax.legend(fontsize=8)
        ax.grid(True, which="both", alpha=0.25)
        panel = RenderedPanel(game=game, labels=[tr.label for tr in series])
        slug = game.replace("/", "_").replace(":", "_")
        for ext in ("svg", "png"):
            path = layout.out_dir / f"{slug}.{ext}"
            if ext == "svg":
                fig.savefig(path, metadata={"Date": None})
            else:
                fig.savefig(path, dpi=layout.dpi)
            panel.paths.append(path)
        plt.close(fig)
        rendered.append(panel)
    return rendered


def series_parallel_to_guide(trace: TraceFile, slope: float, tol: float = 0.01) -> bool:
    """Whether the fitted log-log slope of a trace matches a guide slope."""
    return abs(fitted_slope(trace.t, trace.residual) - slope) <= tol
