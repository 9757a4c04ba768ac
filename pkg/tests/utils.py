import os

import numpy as np

from subsup.bounds import BoundsPair
from subsup.grid import Grid, ScalarField
from subsup.problem import StatePair


def file_exists(path):
    exist = True
    try:
        os.stat(path)
    except OSError:
        exist = False

    return exist


def write_scenario(path, kind="interval", extents="0,1", resolution=17, **extra):
    """
    Write a scenario file. Extra keys are given with "__" for the dots,
    e.g. spec__sign="plus" or solver__tol=1e-9.
    """
    lines = [
        f"domain.kind = {kind}",
        f"domain.extents = {extents}",
        f"domain.resolution = {resolution}",
    ]
    for key, value in extra.items():
        lines.append(f"{key.replace('__', '.')} = {value}")

    path = str(path)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path


def constant_bounds(grid: Grid, lower: float, upper: float) -> BoundsPair:
    """a (non-certified) band of constants, for exercising the truncation"""
    lo = ScalarField.constant(grid, lower)
    hi = ScalarField.constant(grid, upper)
    return BoundsPair.from_pairs(StatePair(lo, lo), StatePair(hi, hi))


def random_band(rng, bounds, node, size):
    """uniform samples of (s, t) inside the band at node"""
    s = rng.uniform(bounds.u_lower.values[node], bounds.u_upper.values[node], size)
    t = rng.uniform(bounds.v_lower.values[node], bounds.v_upper.values[node], size)
    return s, t


def sin_field(grid: Grid) -> ScalarField:
    return ScalarField.from_function(grid, lambda x: np.sin(np.pi * x), dirichlet=True)
