"""Figure rendering: named line/scatter series to standalone SVG files."""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "spiked-unfold"  # reproducible glyph ids

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


@dataclass(frozen=True)
class Series:
    """One plotted series; ``style`` is "line" or "scatter", with optional
    symmetric error bars on scatter points."""

    name: str
    x: tuple
    y: tuple
    style: str = "line"
    yerr: tuple | None = None

    def __post_init__(self):
        if self.style not in ("line", "scatter"):
            raise ValueError("style must be 'line' or 'scatter'")
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")
        pts = np.asarray(self.x, dtype=float), np.asarray(self.y, dtype=float)
        if not all(np.all(np.isfinite(p)) for p in pts):
            raise ValueError("series points must be finite")


@dataclass(frozen=True)
class PlotSpec:
    """A complete figure: labels plus at least one series and a target path."""

    title: str
    x_label: str
    y_label: str
    series: tuple
    output_path: str

    def __post_init__(self):
        if not self.series:
            raise ValueError("need at least one series")


def render(spec: PlotSpec) -> str:
    """Draw the figure and write it as a self-contained SVG.

    Every series gets an SVG group id "series:<name>" so consumers can
    locate one path/point-group per series.
    """
    fig, ax = plt.subplots(figsize=(8.0, 6.0))
    try:
        for s in spec.series:
            gid = f"series:{s.name}"
            if s.style == "line":
                ax.plot(s.x, s.y, label=s.name, gid=gid)
            else:
                if s.yerr is not None:
                    ax.errorbar(s.x, s.y, yerr=s.yerr, fmt="none",
                                ecolor="0.6", capsize=2)
                ax.plot(s.x, s.y, "o", label=s.name, gid=gid, markersize=4)
        ax.set_title(spec.title)
        ax.set_xlabel(spec.x_label)
        ax.set_ylabel(spec.y_label)
        ax.legend(loc="best")
        # drop the creation date so identical inputs give identical bytes
        fig.savefig(spec.output_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return spec.output_path
