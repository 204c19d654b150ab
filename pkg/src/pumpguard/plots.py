"""SVG rendering: annotated signal plots and confusion heat tables.

Output is deterministic: a fixed svg.hashsalt, no Date metadata, and a
72 dpi figure so SVG user units equal printer's points. Marker groups
carry stable gid attributes ("earlywarning-markers", "criticalalert-
markers", "injected-markers"), one <use> element per plotted point, so
tests can count alarms straight off the file. The data-to-SVG y mapping
svg_y = a * value + b is recorded in the Description metadata as
"y-transform a=<a> b=<b>".
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib
import numpy as np
from matplotlib import patches
from matplotlib.figure import Figure

from .domain import PARAMETERS, HealthLabel, ParameterKind
from .evaluation import EvaluationCell
from .synth import InjectionLog
from .thresholds import LabeledSeries

_SVG_RC = {
    "svg.hashsalt": "pumpguard",
    "svg.fonttype": "none",
    "font.family": "sans-serif",
}

_SIGNAL_COLOR = "#4878a8"
_FIXED_COLOR = "#c0392b"
_ADAPTIVE_COLOR = "#e67e22"
_EW_COLOR = "#e67e22"
_CA_COLOR = "#c0392b"
_INJECTED_COLOR = "#2c3e50"


def _save_deterministic(fig: Figure, path: str | Path, description: str) -> None:
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(
            path,
            format="svg",
            metadata={"Date": None, "Description": description},
        )


def plot_parameter(
    labeled: LabeledSeries,
    parameter: ParameterKind,
    path: str | Path,
    injection_log: InjectionLog | None = None,
) -> None:
    """One annotated signal plot: polyline, both threshold lines, alarm
    markers, and (when a log is given) injection markers."""
    values = labeled.base.column(parameter)
    labels = np.asarray(labeled.labels[parameter])
    pair = labeled.thresholds_used[parameter]
    x = np.arange(len(values))

    fig = Figure(figsize=(8.0, 3.5), dpi=72)
    ax = fig.add_subplot(111)
    fig.subplots_adjust(left=0.09, right=0.98, top=0.92, bottom=0.16)

    ax.plot(x, values, color=_SIGNAL_COLOR, linewidth=0.7, label="signal", gid="signal")
    ax.axhline(
        pair.fixed, color=_FIXED_COLOR, linewidth=1.2,
        label="fixed threshold", gid="fixed-threshold",
    )
    ax.axhline(
        pair.adaptive, color=_ADAPTIVE_COLOR, linewidth=1.2, linestyle="--",
        label="adaptive threshold (P95)", gid="adaptive-threshold",
    )
    ew = labels == HealthLabel.EARLY_WARNING.value
    ca = labels == HealthLabel.CRITICAL_ALERT.value
    ax.plot(
        x[ew], values[ew], linestyle="none", marker="o", markersize=3.5,
        color=_EW_COLOR, label="early warning", gid="earlywarning-markers",
    )
    ax.plot(
        x[ca], values[ca], linestyle="none", marker="^", markersize=5.5,
        color=_CA_COLOR, label="critical alert", gid="criticalalert-markers",
    )
    if injection_log is not None:
        idx = [r.index for r in injection_log if r.parameter is parameter]
        ax.plot(
            idx, values[idx], linestyle="none", marker="x", markersize=8.0,
            color=_INJECTED_COLOR, label="injected", gid="injected-markers",
        )

    ax.set_xlabel("sample index")
    ax.set_ylabel(f"{parameter.key} [{parameter.unit}]")
    ax.set_title(f"{parameter.key}: signal and alarm thresholds")
    ax.legend(loc="upper right", fontsize=8, ncols=3)

    # The SVG y-axis points down while display coordinates point up, so
    # svg_y = height - display_y; both are in points at 72 dpi.
    fig.canvas.draw()
    height = fig.bbox.height
    y0 = ax.transData.transform((0.0, 0.0))[1]
    y1 = ax.transData.transform((0.0, 1.0))[1]
    a = -(y1 - y0)
    b = height - y0
    _save_deterministic(fig, path, f"y-transform a={float(a)!r} b={float(b)!r}")


def plot_signals(
    labeled: LabeledSeries,
    out_dir: str | Path,
    injection_log: InjectionLog | None = None,
) -> list[Path]:
    out_dir = Path(out_dir)
    paths = []
    for parameter in PARAMETERS:
        path = out_dir / f"signal_{parameter.key}.svg"
        plot_parameter(labeled, parameter, path, injection_log)
        paths.append(path)
    return paths


def _draw_matrix(ax, cell: EvaluationCell) -> None:
    matrix = cell.matrix.matrix
    scale = matrix.max() or 1
    short = ("N", "EW", "CA")
    for i in range(3):
        for j in range(3):
            weight = matrix[i, j] / scale
            ax.add_patch(
                patches.Rectangle(
                    (j, 2 - i), 1, 1,
                    facecolor=(1 - 0.75 * weight, 1 - 0.45 * weight, 1.0),
                    edgecolor="#888888", linewidth=0.5,
                )
            )
            ax.text(
                j + 0.5, 2 - i + 0.5, str(int(matrix[i, j])),
                ha="center", va="center", fontsize=8,
                gid=f"cell-{cell.parameter.key}-{i}-{j}",
            )
    ax.set_xlim(0, 3)
    ax.set_ylim(0, 3)
    ax.set_xticks([0.5, 1.5, 2.5], short, fontsize=7)
    ax.set_yticks([2.5, 1.5, 0.5], short, fontsize=7)
    ax.set_xlabel("predicted", fontsize=7)
    ax.set_ylabel("true", fontsize=7)
    ax.set_title(cell.parameter.key, fontsize=9)
    ax.set_aspect("equal")


def plot_confusion_grid(
    cells: Sequence[EvaluationCell], approach: str, path: str | Path
) -> None:
    """Five per-parameter confusion matrices for one approach, side by
    side as vector heat tables."""
    fig = Figure(figsize=(12.0, 2.9), dpi=72)
    axes = fig.subplots(1, len(cells))
    if len(cells) == 1:
        axes = [axes]
    fig.subplots_adjust(left=0.04, right=0.99, top=0.78, bottom=0.14, wspace=0.45)
    for ax, cell in zip(axes, cells):
        _draw_matrix(ax, cell)
    fig.suptitle(f"{approach}: confusion matrices per parameter", fontsize=11)
    _save_deterministic(fig, path, f"confusion matrices for {approach}")
