"""Renderer: CSV columns in, raster image plus checksum sidecar out.

The only operations between file and figure are row selection and axis
scaling.  Each rendered series is hashed twice — once as read from the
file, once as handed to matplotlib — and the render fails if the digests
ever diverge, so the no-transformation invariant is machine-checked.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .recipes import FigureRecipe


class PlotkitError(Exception):
    """Base error for rendering failures."""


class MissingColumn(PlotkitError):
    def __init__(self, column, path):
        super().__init__(f"required column {column!r} missing from {path}")
        self.column = column
        self.path = str(path)


class EmptyData(PlotkitError):
    pass


@dataclass(frozen=True)
class RenderResult:
    image_path: str
    input_checksum: str
    plotted_checksum: str
    n_series: int


def _load_csv(path: Path) -> dict:
    if not path.exists():
        raise PlotkitError(f"input file {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyData(f"{path} has no header")
        rows = list(reader)
    if not rows:
        raise EmptyData(f"{path} has a header but no data rows")
    columns = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in rows]
        try:
            columns[name] = np.array([float(v) for v in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    return columns


def _column(table: dict, name: str, path) -> np.ndarray:
    if name not in table:
        raise MissingColumn(name, path)
    return table[name]


def _select(table: dict, where, path) -> np.ndarray:
    n = len(next(iter(table.values())))
    mask = np.ones(n, dtype=bool)
    if where is None:
        return mask
    conditions = [where] if isinstance(where[0], str) else list(where)
    for col, value in conditions:
        column = _column(table, col, path)
        if column.dtype == object:
            mask &= column == str(value)
        else:
            mask &= column == float(value)
    return mask


def _digest(chunks) -> str:
    h = hashlib.sha256()
    for arr in chunks:
        h.update(np.ascontiguousarray(arr, dtype=float).tobytes())
    return h.hexdigest()


def render(recipe: FigureRecipe, data_dir=".") -> RenderResult:
    """Draw the recipe and write the image plus a checksum sidecar.

    Raises MissingColumn/EmptyData before any file is written; the image
    only appears on success.
    """
    data_dir = Path(data_dir)
    tables = {}
    input_chunks = []
    plotted_chunks = []

    # resolve every series first: no image should exist if inputs are bad
    resolved = []
    for panel in recipe.panels:
        for series in panel.series:
            path = data_dir / series.path
            if series.path not in tables:
                tables[series.path] = _load_csv(path)
            table = tables[series.path]
            mask = _select(table, series.where, path)
            xs = _column(table, series.x, path)[mask].astype(float)
            ys = _column(table, series.y, path)[mask].astype(float)
            input_chunks.extend([xs, ys])
            resolved.append((panel, series, xs, ys))
    if not resolved:
        raise EmptyData("recipe resolves to no series")
    input_checksum = _digest(input_chunks)

    n_panels = len(recipe.panels)
    fig, axes = plt.subplots(
        1, n_panels, figsize=(5.2 * n_panels, 4.0), squeeze=False, constrained_layout=True
    )
    ax_for_panel = {id(p): axes[0][i] for i, p in enumerate(recipe.panels)}
    twins = {}
    for panel, series, xs, ys in resolved:
        ax = ax_for_panel[id(panel)]
        if series.twin:
            if id(panel) not in twins:
                twins[id(panel)] = ax.twinx()
            target = twins[id(panel)]
        else:
            target = ax
        target.plot(xs, ys, label=series.label or None, **series.style)
        plotted_chunks.extend([xs, ys])
    for panel in recipe.panels:
        ax = ax_for_panel[id(panel)]
        ax.set_title(panel.title)
        ax.set_xlabel(panel.xlabel)
        ax.set_ylabel(panel.ylabel)
        ax.set_xscale(panel.xscale)
        ax.set_yscale(panel.yscale)
        if id(panel) in twins and panel.twin_ylabel:
            twins[id(panel)].set_ylabel(panel.twin_ylabel)
            twins[id(panel)].set_yscale(panel.twin_yscale)
        handles, labels = ax.get_legend_handles_labels()
        if id(panel) in twins:
            h2, l2 = twins[id(panel)].get_legend_handles_labels()
            handles += h2
            labels += l2
        if any(labels):
            ax.legend(handles, labels, fontsize=8)

    plotted_checksum = _digest(plotted_chunks)
    if plotted_checksum != input_checksum:
        plt.close(fig)
        raise PlotkitError("plotted values diverged from input columns")

    out = Path(recipe.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {
        "Title": recipe.name,
        "Description": json.dumps(
            {
                "sources": sorted(tables),
                "config_hash": recipe.metadata.get("config_hash", ""),
                "input_checksum": input_checksum,
            },
            sort_keys=True,
        ),
    }
    fig.savefig(out, dpi=150, metadata=metadata)
    plt.close(fig)
    sidecar = {
        "figure": recipe.name,
        "image": out.name,
        "sources": sorted(tables),
        "config_hash": recipe.metadata.get("config_hash", ""),
        "input_checksum": input_checksum,
        "plotted_checksum": plotted_checksum,
        "n_series": len(resolved),
    }
    out.with_suffix(".render.json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=1) + "\n"
    )
    return RenderResult(
        image_path=str(out),
        input_checksum=input_checksum,
        plotted_checksum=plotted_checksum,
        n_series=len(resolved),
    )
