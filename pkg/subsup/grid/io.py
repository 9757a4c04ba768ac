"""
Serialisation of grids (JSON descriptor) and fields (CSV, one row per node).
"""

import json
from pathlib import Path
from typing import Any, Dict, Mapping, Union

import numpy as np
import pandas as pd

from ..exceptions import GridError
from . import Grid, ScalarField, build_grid

AXIS_NAMES = ("x", "y")

# full round-trip precision so every reported number is recomputable
FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def field_frame(field: ScalarField) -> pd.DataFrame:
    grid = field.grid
    columns: Dict[str, Any] = {AXIS_NAMES[a]: grid.node_coords[:, a] for a in range(grid.dim)}
    columns["value"] = field.values
    return pd.DataFrame(columns)


def fields_frame(fields: Mapping[str, ScalarField]) -> pd.DataFrame:
    """several fields on one grid, one value column per field"""
    first = next(iter(fields.values()))
    grid = first.grid
    columns: Dict[str, Any] = {AXIS_NAMES[a]: grid.node_coords[:, a] for a in range(grid.dim)}
    for name, f in fields.items():
        if not f.grid.matches(grid):
            raise GridError(f'field "{name}" lives on a different grid')
        columns[name] = f.values
    return pd.DataFrame(columns)


def write_field_csv(path: PathLike, field: ScalarField) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    field_frame(field).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return str(path)


def read_field_csv(path: PathLike, grid: Grid) -> ScalarField:
    frame = pd.read_csv(path)
    if len(frame) != grid.n_nodes:
        raise GridError(f"{path} holds {len(frame)} rows, grid has {grid.n_nodes} nodes")
    coords = frame[list(AXIS_NAMES[: grid.dim])].to_numpy()
    if not np.allclose(coords, grid.node_coords, rtol=0, atol=1e-12):
        raise GridError(f"{path} node coordinates do not match the grid")
    return ScalarField(grid, frame["value"].to_numpy())


def write_grid_json(path: PathLike, grid: Grid) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(grid.descriptor(), f, indent=2)
    return str(path)


def grid_from_descriptor(desc: Mapping[str, Any]) -> Grid:
    return build_grid(
        desc["kind"],
        desc["extents"],
        desc["resolution"],
        radius=desc.get("radius"),
        center=desc.get("center"),
    )


def read_grid_json(path: PathLike) -> Grid:
    with open(path, "r") as f:
        return grid_from_descriptor(json.load(f))
