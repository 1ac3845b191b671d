"""Flat JSON serialization of sampled fields and CSV diagnostics.

A field file is a single JSON object: the grid resolution, the
component shape, and the values flattened in row-major order, plus any
metadata keys the caller supplies (degree, representation, parity, ...).
No binary containers, so filesground-truth well in diffs.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .grid import Chart, Grid, build_grid


class FieldIOError(ValueError):
    pass


def field_dict(values, grid, **meta):
    values = np.asarray(values, dtype=float)
    if values.shape[: 3] != grid.shape:
        raise FieldIOError(f"values shape {values.shape} does not match grid {grid.shape}")
    out = {
        "resolution": list(grid.shape),
        "shape": list(values.shape[3:]),
        "values": values.ravel(order="C").tolist(),
    }
    out.update(meta)
    return out


def save_field(path, values, grid, **meta):
    with open(path, "w") as fh:
        json.dump(field_dict(values, grid, **meta), fh)


def parse_field(data, grid=None):
    """(values, meta) from a field dict; validates length and finiteness."""
    resolution = tuple(data["resolution"])
    shape = tuple(data["shape"])
    values = np.asarray(data["values"], dtype=float)
    expected = int(np.prod(resolution + shape)) if shape else int(np.prod(resolution))
    if values.size != expected:
        raise FieldIOError(f"expected {expected} values, got {values.size}")
    values = values.reshape(resolution + shape)
    if not np.all(np.isfinite(values)):
        raise FieldIOError("field contains non-finite values")
    if grid is not None and grid.shape != resolution:
        raise FieldIOError(f"grid shape {grid.shape} != field resolution {resolution}")
    meta = {k: v for k, v in data.items() if k not in ("resolution", "shape", "values")}
    return values, meta


def load_field(path, grid=None):
    with open(path) as fh:
        data = json.load(fh)
    return parse_field(data, grid=grid)


def chart_from_dict(data):
    return Chart(
        name=data.get("name", "body"),
        ranges=tuple(tuple(r) for r in data.get("ranges", ((0.0, 1.0),) * 3)),
        coordinate_system=data.get("coordinate_system", "cartesian"),
    )


def grid_from_dict(data):
    chart = chart_from_dict(data.get("chart", {}))
    return build_grid(chart, data.get("resolution", (9, 9, 9)))


def write_csv(path, columns):
    """Write named scalar columns (dict of equal-length sequences)."""
    keys = list(columns)
    rows = zip(*[columns[k] for k in keys])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(keys)
        for row in rows:
            writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
