"""Render sweep CSVs into static vector figures.

The renderer validates its inputs and refuses to draw anything from rows
flagged non-converged; it never computes physics.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .specs import FIGURE_SPECS, FigureSpec, Panel


class RenderError(RuntimeError):
    """Missing inputs, missing columns, or non-converged rows."""


def load_rows(csv_path: Path, required_columns) -> List[Dict[str, str]]:
    if not csv_path.exists():
        raise RenderError(f"missing input CSV: {csv_path}")
    with csv_path.open(newline="") as handle:
        reader = csv.DictReader(handle)
        columns = reader.fieldnames or []
        missing = [c for c in required_columns if c not in columns]
        if missing:
            raise RenderError(
                f"{csv_path.name}: missing required columns {missing} (have {columns})"
            )
        rows = list(reader)
    if not rows:
        raise RenderError(f"{csv_path.name}: no data rows")
    return rows


def _matches(row: Dict[str, str], filters: Dict[str, str]) -> bool:
    for column, wanted in filters.items():
        try:
            if float(row[column]) != float(wanted):
                return False
        except ValueError:
            if row[column] != wanted:
                return False
    return True


def _draw_panel(ax, panel: Panel, rows: List[Dict[str, str]], csv_name: str) -> None:
    for curve in panel.curves:
        selected = [r for r in rows if _matches(r, curve.filters)]
        if not selected:
            raise RenderError(
                f"{csv_name}: no rows match {curve.filters} for panel {panel.title!r}"
            )
        bad = [r for r in selected if r.get("converged", "1") != "1"]
        if bad:
            raise RenderError(
                f"{csv_name}: {len(bad)} non-converged rows match {curve.filters}; refusing to plot"
            )
        points = sorted(
            (float(r[panel.x_column]), float(r[panel.y_column])) for r in selected
        )
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        if panel.y_floor is not None and panel.y_scale == "log":
            keep = [(x, y) for x, y in zip(xs, ys) if y > panel.y_floor]
            if not keep:
                continue
            xs, ys = zip(*keep)
        if panel.x_scale == "log":
            pairs = [(x, y) for x, y in zip(xs, ys) if x > 0]
            if not pairs:
                continue
            xs, ys = zip(*pairs)
        ax.plot(xs, ys, label=curve.label, **curve.style)
    ax.set_xscale(panel.x_scale)
    ax.set_yscale(panel.y_scale)
    ax.set_title(panel.title)
    if panel.x_label:
        ax.set_xlabel(panel.x_label)
    if panel.y_label:
        ax.set_ylabel(panel.y_label)
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.25)


def render(figure_id: str, data_dir: Path, out_path: Path) -> Path:
    """Render one figure from a completed run directory. Writes a vector file."""
    if figure_id not in FIGURE_SPECS:
        raise RenderError(
            f"unknown figure id {figure_id!r}; known: {sorted(FIGURE_SPECS)}"
        )
    spec: FigureSpec = FIGURE_SPECS[figure_id]
    rows = load_rows(Path(data_dir) / spec.csv_name, spec.required_columns)

    n = len(spec.panels)
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 3.4))
    if n == 1:
        axes = [axes]
    try:
        for ax, panel in zip(axes, spec.panels):
            _draw_panel(ax, panel, rows, spec.csv_name)
        if spec.suptitle:
            fig.suptitle(spec.suptitle)
        fig.tight_layout()
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_path)
    except RenderError:
        plt.close(fig)
        raise
    plt.close(fig)
    return out_path
