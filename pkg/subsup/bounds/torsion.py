"""
Torsion function of a ball enclosing the domain, restricted to the domain.

The solution e of -Δe = 1 in B, e = 0 on ∂B is strictly positive on the
closure of any domain sitting inside B with room to spare, which is what
makes M·e a supersolution of the (S)₊ system up to the domain boundary.
"""

import math
from typing import List, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..exceptions import BoundsError
from ..grid import DomainKind, Grid, ScalarField, build_grid, solve_poisson
from ..utils import debug

DEFAULT_BALL_FACTOR = 1.25

# minimal gap between the domain and the ball boundary, relative to the domain circumradius
MIN_CLEARANCE = 0.25


def solve_torsion(grid: Grid) -> ScalarField:
    """-Δ_h e = 1 on the grid's own domain, e = 0 on its boundary"""
    return solve_poisson(grid, ScalarField.constant(grid, 1.0))


def ball_radius(grid: Grid) -> float:
    """radius of the ball (interval in 1D, disc in 2D) a grid discretises"""
    if grid.kind == DomainKind.DISC:
        assert grid.radius is not None
        return grid.radius
    if grid.kind == DomainKind.INTERVAL:
        lo, hi = grid.extents[0]
        return (hi - lo) / 2.0
    raise BoundsError(f"a {grid.kind.value} grid does not discretise a ball")


def clearance(ball_grid: Grid, target: Grid) -> float:
    """distance from the farthest point of the target domain to the ball boundary"""
    offset = float(np.linalg.norm(np.subtract(target.center, ball_grid.center)))
    return ball_radius(ball_grid) - (offset + target.circumradius)


def enclosing_grid(target: Grid, ball_factor: float = DEFAULT_BALL_FACTOR) -> Grid:
    """
    Grid over the ball of radius ball_factor·circumradius around the target's
    center. The ball grid shares the target's spacing and is shifted by whole
    cells, so every target node is a ball node.
    """
    if ball_factor < 1.0 + MIN_CLEARANCE:
        raise BoundsError(f"ball_factor must be >= {1.0 + MIN_CLEARANCE}, got {ball_factor}")

    radius = ball_factor * target.circumradius
    extents: List[List[float]] = []
    resolution: List[int] = []
    for (lo, hi), h, n in zip(target.extents, target.spacing, target.resolution):
        half = (hi - lo) / 2.0
        k = max(math.ceil((radius - half) / h), 0)
        if target.dim == 2:
            # keep a ring of exterior nodes around the disc
            k += 1
        extents.append([lo - k * h, hi + k * h])
        resolution.append(n + 2 * k)

    if target.dim == 1:
        # a 1D ball is an interval, its radius rounds up to whole cells
        return build_grid("interval", extents, resolution)
    return build_grid("disc", extents, resolution, radius=radius, center=target.center)


def torsion_function(ball_grid: Grid, target: Grid, ball_e: Optional[ScalarField] = None) -> ScalarField:
    """
    Solve the torsion problem on ball_grid and restrict it to the target
    nodes by (multi)linear interpolation.
    """
    if ball_grid.dim != target.dim:
        raise BoundsError(f"ball grid is {ball_grid.dim}D, target is {target.dim}D")

    gap = clearance(ball_grid, target)
    if gap < MIN_CLEARANCE * target.circumradius * (1.0 - 1e-12):
        raise BoundsError(
            f"enclosing ball leaves clearance {gap:.6g}, "
            f"need at least {MIN_CLEARANCE * target.circumradius:.6g} ({MIN_CLEARANCE:.0%} of the circumradius)"
        )

    e = ball_e if ball_e is not None else solve_torsion(ball_grid)
    debug(f"torsion: ball grid {ball_grid.resolution}, max e = {np.max(e.values):.6g}")

    interpolator = RegularGridInterpolator(
        tuple(ball_grid.axes), e.values.reshape(ball_grid.shape), method="linear", bounds_error=True
    )
    try:
        values = interpolator(target.node_coords)
    except ValueError as err:
        raise BoundsError(f"target nodes outside the enclosing grid: {err}")

    restricted = ScalarField(target, values)
    # the closed domain; disc grids also carry box corners outside it
    r = np.linalg.norm(target.node_coords - np.asarray(target.center), axis=1)
    closure = r <= target.circumradius * (1.0 + 1e-12)
    if not np.all(restricted.values[closure] > 0):
        raise BoundsError("torsion function is not positive on the target nodes")
    return restricted
