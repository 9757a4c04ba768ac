"""
Uniform finite-difference discretisation of the domain.

A `Grid` is a box of nodes (an interval in 1D, a rectangle in 2D) where every
node is either interior or boundary. Disc domains are a rectangle with the
nodes outside the disc masked to boundary. Fields are plain nodal arrays
tied to the grid they live on; all operators below are pure functions.

The discrete negative Laplacian is the (2N+1)-point stencil

    (-Δ_h f)(x) = Σ_a (2 f(x) - f(x + h_a e_a) - f(x - h_a e_a)) / h_a²

evaluated at interior nodes (zero on the boundary). It is assembled once per
grid as a sparse matrix and its interior block is LU-factorised lazily, so
every Poisson solve after the first is a pair of triangular solves.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from ..exceptions import GridError, LinearSolveError
from ..types import GridDescriptor

# nodes closer than this (relative) to the disc edge count as boundary
_DISC_EDGE_RTOL = 1e-12


class DomainKind(Enum):
    INTERVAL = "interval"
    RECTANGLE = "rectangle"
    DISC = "disc"


_DIMENSION = {
    DomainKind.INTERVAL: 1,
    DomainKind.RECTANGLE: 2,
    DomainKind.DISC: 2,
}


@dataclass(frozen=True, eq=False)
class Grid:
    kind: DomainKind
    extents: Tuple[Tuple[float, float], ...]
    resolution: Tuple[int, ...]
    center: Tuple[float, ...]
    radius: Optional[float] = None

    spacing: Tuple[float, ...] = field(init=False)
    interior_mask: np.ndarray = field(init=False, repr=False)
    interior_nodes: np.ndarray = field(init=False, repr=False)
    interior_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        spacing = tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.extents, self.resolution))

        # interior of the box: every node not on the box edge
        box = np.zeros(self.resolution, dtype=bool)
        box[tuple(slice(1, -1) for _ in self.resolution)] = True
        mask = box.ravel()

        if self.kind == DomainKind.DISC:
            assert self.radius is not None
            r = np.linalg.norm(self.node_coords - np.asarray(self.center), axis=1)
            mask = mask & (r < self.radius * (1.0 - _DISC_EDGE_RTOL))

        interior_nodes = np.flatnonzero(mask)
        interior_index = np.full(mask.size, -1, dtype=np.int64)
        interior_index[interior_nodes] = np.arange(interior_nodes.size)

        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "interior_mask", mask)
        object.__setattr__(self, "interior_nodes", interior_nodes)
        object.__setattr__(self, "interior_index", interior_index)

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.resolution

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def n_interior(self) -> int:
        return int(self.interior_nodes.size)

    @property
    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.extents, self.resolution)]

    @cached_property
    def node_coords(self) -> np.ndarray:
        """(n_nodes, N) coordinates, C-order over the axes"""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def circumradius(self) -> float:
        """radius of the smallest ball around `center` containing the domain"""
        if self.kind == DomainKind.DISC:
            assert self.radius is not None
            return self.radius
        half = [(hi - lo) / 2.0 for lo, hi in self.extents]
        return float(np.sqrt(np.sum(np.square(half))))

    @cached_property
    def weights(self) -> np.ndarray:
        """
        Quadrature weights: composite trapezoidal rule over the box for
        intervals and rectangles, cell volume at interior nodes for discs.
        """
        if self.kind == DomainKind.DISC:
            return np.where(self.interior_mask, self.cell_volume, 0.0)

        w: np.ndarray = np.ones(1)
        for h, n in zip(self.spacing, self.resolution):
            w1 = np.full(n, h)
            w1[[0, -1]] = h / 2.0
            w = np.outer(w, w1).ravel()
        return w

    @cached_property
    def stencil(self) -> sps.csr_matrix:
        """
        Sparse -Δ_h over all nodes, with zero rows at boundary nodes
        """
        op: Any = None
        for a, (h, n) in enumerate(zip(self.spacing, self.resolution)):
            d1 = sps.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n)) / h**2
            factors = [sps.identity(m) for m in self.resolution]
            factors[a] = d1
            term = factors[0]
            for f in factors[1:]:
                term = sps.kron(term, f)
            op = term if op is None else op + term

        keep = sps.diags(self.interior_mask.astype(float))
        return (keep @ op).tocsr()

    @cached_property
    def laplacian_matrix(self) -> sps.csc_matrix:
        """interior block of the stencil: the Dirichlet -Δ_h"""
        idx = self.interior_nodes
        return self.stencil[idx][:, idx].tocsc()

    @cached_property
    def factor(self) -> Any:
        if self.n_interior == 0:
            raise GridError("grid has no interior nodes")
        try:
            return spla.splu(self.laplacian_matrix)
        except RuntimeError as e:
            raise LinearSolveError(f"factorisation of the Dirichlet Laplacian failed: {e}")

    def matches(self, other: "Grid") -> bool:
        if self is other:
            return True
        return (
            self.kind == other.kind
            and self.resolution == other.resolution
            and np.allclose(self.extents, other.extents, rtol=0, atol=1e-14)
            and np.allclose(self.center, other.center, rtol=0, atol=1e-14)
            and self.radius == other.radius
        )

    def descriptor(self) -> GridDescriptor:
        desc: GridDescriptor = {
            "kind": self.kind.value,
            "extents": [list(e) for e in self.extents],
            "resolution": list(self.resolution),
        }
        if self.kind == DomainKind.DISC:
            desc["center"] = list(self.center)
            desc["radius"] = self.radius
        return desc


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise GridError(f"expected {self.grid.n_nodes} nodal values, got {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.n_nodes))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ScalarField":
        return cls(grid, np.full(grid.n_nodes, float(c)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., Any], dirichlet: bool = False) -> "ScalarField":
        """
        Sample fn(x[, y]) at every node. With dirichlet=True the boundary
        values are set to zero.
        """
        values = np.asarray(fn(*grid.node_coords.T), dtype=float) * np.ones(grid.n_nodes)
        if dirichlet:
            values = np.where(grid.interior_mask, values, 0.0)
        return cls(grid, values)

    @property
    def interior(self) -> np.ndarray:
        return self.values[self.grid.interior_nodes]

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, c * self.values)

    def is_dirichlet(self, atol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.values[self.grid.boundary_mask]) <= atol))


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes, self.grid.dim):
            raise GridError(f"expected ({self.grid.n_nodes}, {self.grid.dim}) nodal vectors, got {values.shape}")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((grid.n_nodes, grid.dim)))


Extents = Sequence[Union[Tuple[float, float], Sequence[float]]]


def build_grid(
    domain_kind: Union[str, DomainKind],
    extents: Extents,
    resolution: Union[int, Sequence[int]],
    radius: Optional[float] = None,
    center: Optional[Sequence[float]] = None,
) -> Grid:
    """
    Build a grid over an interval, a rectangle or a disc.

    For discs the extents are the bounding box; the disc is centred on the
    box unless `center` is given and has the inscribed radius unless
    `radius` is given.
    """
    try:
        kind = DomainKind(domain_kind)
    except ValueError:
        raise GridError(f'unknown domain kind "{domain_kind}"')

    dim = _DIMENSION[kind]
    ext = tuple((float(e[0]), float(e[1])) for e in extents)
    if isinstance(resolution, (int, np.integer)):
        res = (int(resolution),) * dim
    else:
        res = tuple(int(n) for n in resolution)

    if len(ext) != dim or len(res) != dim:
        raise GridError(f"{kind.value} needs {dim} axes, got extents {len(ext)} and resolution {len(res)}")
    for n in res:
        if n < 3:
            raise GridError(f"resolution {n} leaves no interior nodes (need >= 3 per axis)")
    for lo, hi in ext:
        if not hi > lo:
            raise GridError(f"extent ({lo}, {hi}) is not positive")

    ctr = tuple(float(c) for c in center) if center is not None else tuple((lo + hi) / 2.0 for lo, hi in ext)
    rad: Optional[float] = None
    if kind == DomainKind.DISC:
        rad = float(radius) if radius is not None else min((hi - lo) / 2.0 for lo, hi in ext)
        if rad <= 0:
            raise GridError(f"disc radius {rad} is not positive")

    return Grid(kind=kind, extents=ext, resolution=res, center=ctr, radius=rad)


def _check(grid: Grid, *fields: Union[ScalarField, VectorField]) -> None:
    for f in fields:
        if not f.grid.matches(grid):
            raise GridError("field lives on a different grid")


def apply_laplacian(grid: Grid, f: ScalarField) -> ScalarField:
    """-Δ_h f at interior nodes, zero on the boundary"""
    _check(grid, f)
    return ScalarField(grid, grid.stencil @ f.values)


def gradient(grid: Grid, f: ScalarField) -> VectorField:
    """
    Central differences inside the box, first-order one-sided differences on
    the box edges.
    """
    _check(grid, f)
    arr = f.values.reshape(grid.shape)
    parts = np.gradient(arr, *grid.spacing, edge_order=1)
    if grid.dim == 1:
        parts = [parts]
    return VectorField(grid, np.stack([p.ravel() for p in parts], axis=1))


def integrate(grid: Grid, f: ScalarField) -> float:
    _check(grid, f)
    return float(np.dot(grid.weights, f.values))


def _edge_differences(grid: Grid, values: np.ndarray) -> List[np.ndarray]:
    # per axis: forward differences / h over every grid edge
    arr = values.reshape(grid.shape)
    return [np.diff(arr, axis=a) / h for a, h in enumerate(grid.spacing)]


def grad_inner(grid: Grid, f: ScalarField, g: ScalarField) -> float:
    """
    Discrete Dirichlet form Σ_edges (Δf/h)(Δg/h)·vol over all grid edges.
    For g vanishing on the boundary this equals integrate(apply_laplacian(f)·g)
    exactly (summation by parts); edges between two boundary nodes then
    contribute nothing.
    """
    _check(grid, f, g)
    total = 0.0
    for df, dg in zip(_edge_differences(grid, f.values), _edge_differences(grid, g.values)):
        total += float(np.sum(df * dg))
    return total * grid.cell_volume


def h1_seminorm(grid: Grid, f: ScalarField) -> float:
    return float(np.sqrt(max(grad_inner(grid, f, f), 0.0)))


def l2_norm(grid: Grid, f: ScalarField) -> float:
    _check(grid, f)
    return float(np.sqrt(np.dot(grid.weights, f.values**2)))


def linf_norm(f: ScalarField) -> float:
    return float(np.max(np.abs(f.values)))


def solve_poisson(grid: Grid, rhs: ScalarField) -> ScalarField:
    """
    Solve -Δ_h w = rhs at interior nodes with w = 0 on the boundary, using
    the grid's cached sparse LU factorisation.
    """
    _check(grid, rhs)
    w = np.zeros(grid.n_nodes)
    sol = grid.factor.solve(rhs.values[grid.interior_nodes])
    if not np.all(np.isfinite(sol)):
        raise LinearSolveError("Poisson back-substitution produced non-finite values")
    w[grid.interior_nodes] = sol
    return ScalarField(grid, w)


__all__ = [
    "DomainKind",
    "Grid",
    "ScalarField",
    "VectorField",
    "build_grid",
    "apply_laplacian",
    "gradient",
    "integrate",
    "grad_inner",
    "h1_seminorm",
    "l2_norm",
    "linf_norm",
    "solve_poisson",
]
