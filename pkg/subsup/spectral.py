"""
First Dirichlet eigenpair of -Δ_h by inverse power iteration.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .exceptions import EigenError, SpecError
from .grid import Grid, ScalarField
from .utils import debug

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 10000


@dataclass(frozen=True)
class EigenPair:
    lambda1: float
    phi1: ScalarField
    iterations: int = 0
    residual: float = 0.0
    rayleigh_history: List[float] = field(default_factory=list, repr=False)


def first_eigenpair(grid: Grid, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS) -> EigenPair:
    """
    Smallest eigenvalue λ₁ and positive eigenfunction φ₁ (sup-normalised)
    of the Dirichlet -Δ_h on grid.

    Iterates v <- normalize(solve_poisson(v)) from the all-ones interior
    vector with the grid's cached factorisation. Stops once successive
    Rayleigh quotients agree to tol (relative) and the eigen-residual
    max|-Δ_h φ₁ - λ₁ φ₁| is below 10·tol·λ₁.
    """
    if grid.n_interior < 1:
        raise EigenError(0, float("nan"))
    if tol <= 0:
        raise SpecError(f"tol must be positive, got {tol}")

    A = grid.laplacian_matrix
    lu = grid.factor

    v = np.ones(grid.n_interior)
    rho = float(v @ (A @ v)) / float(v @ v)
    history = [rho]
    residual = float("inf")

    for it in range(1, max_iters + 1):
        w = lu.solve(v)
        v = w / np.max(np.abs(w))

        Av = A @ v
        rho_next = float(v @ Av) / float(v @ v)

        # inverse iteration on an SPD matrix never increases the Rayleigh quotient
        assert rho_next <= rho * (1.0 + 1e-12), f"Rayleigh quotient increased at iteration {it}"

        residual = float(np.max(np.abs(Av - rho_next * v)))
        history.append(rho_next)
        debug(f"eigen it={it} rho={rho_next:.15g} residual={residual:.3e}")

        if abs(rho_next - rho) < tol * rho_next and residual <= 10 * tol * rho_next:
            phi = np.zeros(grid.n_nodes)
            # the start vector is positive and the inverse is a positive matrix
            phi[grid.interior_nodes] = np.abs(v)
            return EigenPair(
                lambda1=rho_next,
                phi1=ScalarField(grid, phi),
                iterations=it,
                residual=residual,
                rayleigh_history=history,
            )
        rho = rho_next

    raise EigenError(max_iters, residual)
