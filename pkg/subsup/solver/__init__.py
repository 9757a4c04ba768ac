"""
Discrete solves of the truncated, penalised system

    -Δ_h u = H₂(x, u, v, ∇u, ∇v),   -Δ_h v = G₂(x, u, v, ∇u, ∇v)

at a fixed ε. The production method is damped Picard on the inverted
Laplacian form; `newton.dense_newton_solve` is a small-grid oracle with the
same report contract.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, List, Optional, Tuple, Union

import numpy as np

from ..exceptions import DomainError, SpecError
from ..grid import Grid, ScalarField, apply_laplacian, grad_inner, integrate, solve_poisson
from ..problem import StatePair
from ..truncation import (
    NonlinearityContext,
    SystemRhs,
    TruncatedSystem,
    boundedness_constants,
    penalty_maxima,
)
from ..types import SolveReportDict
from ..utils import debug

if TYPE_CHECKING:
    from ..bounds import BoundsPair


class SolverMethod(Enum):
    PICARD = "picard"
    DENSE_NEWTON = "dense-newton"


@dataclass(frozen=True)
class SolverConfig:
    theta: float = 0.5
    tol: float = 1e-10
    max_iter: int = 2000
    method: SolverMethod = SolverMethod.PICARD
    debug: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.method, str):
            try:
                object.__setattr__(self, "method", SolverMethod(self.method))
            except ValueError:
                raise SpecError(f'method must be "picard" or "dense-newton", got "{self.method}"')
        if not (0.0 < self.theta <= 1.0):
            raise SpecError(f"theta must lie in (0,1], got {self.theta}")
        if not self.tol > 0:
            raise SpecError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise SpecError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: List[float]
    method: str = SolverMethod.PICARD.value
    theta: float = 1.0
    eps: float = 0.0
    pairing_history: List[float] = field(default_factory=list)
    # sup of (u-ū)₊,(v-v̄)₊ and of (u̲-u)₊,(v̲-v)₊
    ordering: Optional[Tuple[float, float]] = None
    penalty: Optional[Tuple[float, float]] = None
    message: str = ""

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")

    def to_dict(self) -> SolveReportDict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "method": self.method,
            "theta": self.theta,
            "eps": self.eps,
            "final_residual": self.final_residual,
            "residual_history": list(self.residual_history),
            "pairing_history": list(self.pairing_history),
            "ordering": None if self.ordering is None else list(self.ordering),
            "penalty": None if self.penalty is None else list(self.penalty),
            "message": self.message,
        }


Context = Union[NonlinearityContext, SystemRhs]


def as_system(ctx: Context) -> SystemRhs:
    if isinstance(ctx, NonlinearityContext):
        return TruncatedSystem(ctx)
    return ctx


def lift(grid: Grid, interior: np.ndarray) -> ScalarField:
    """interior values to a nodal field, zero on the boundary"""
    values = np.zeros(grid.n_nodes)
    values[grid.interior_nodes] = interior
    return ScalarField(grid, values)


def _evaluate(system: SystemRhs, state: StatePair) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    grid = state.grid
    idx = grid.interior_nodes
    du, dv = state.gradients()
    f, g = system.rhs(state.u, state.v, du, dv)
    r_u = apply_laplacian(grid, state.u).values[idx] - f
    r_v = apply_laplacian(grid, state.v).values[idx] - g
    return f, g, r_u, r_v


def _sup(r_u: np.ndarray, r_v: np.ndarray) -> float:
    if r_u.size == 0:
        return 0.0
    return float(max(np.max(np.abs(r_u)), np.max(np.abs(r_v))))


def residual(ctx: Context, state: StatePair) -> StatePair:
    """
    r_u = -Δ_h u - H₂(·, u, v, ∇u, ∇v) at interior nodes, zero on the
    boundary; r_v the same with G₂.
    """
    grid = state.grid
    _, _, r_u, r_v = _evaluate(as_system(ctx), state)
    return StatePair(lift(grid, r_u), lift(grid, r_v))


def residual_norm(ctx: Context, state: StatePair) -> float:
    _, _, r_u, r_v = _evaluate(as_system(ctx), state)
    return _sup(r_u, r_v)


def _pairing(state: StatePair, test: StatePair, f: np.ndarray, g: np.ndarray) -> float:
    grid = state.grid
    return (
        grad_inner(grid, state.u, test.u)
        + grad_inner(grid, state.v, test.v)
        - integrate(grid, ScalarField(grid, lift(grid, f).values * test.u.values))
        - integrate(grid, ScalarField(grid, lift(grid, g).values * test.v.values))
    )


def pairing_B(ctx: Context, state: StatePair, test_pair: StatePair) -> float:
    """
    ⟨B(u,v),(φ,ψ)⟩ = ∫∇u·∇φ + ∫∇v·∇ψ - ∫H₂φ - ∫G₂ψ with the discrete
    Dirichlet form and the grid quadrature.
    """
    if not test_pair.grid.matches(state.grid):
        raise SpecError("test pair lives on a different grid")
    du, dv = state.gradients()
    f, g = as_system(ctx).rhs(state.u, state.v, du, dv)
    return _pairing(state, test_pair, f, g)


def ordering_check(state: StatePair, bounds: "BoundsPair") -> Tuple[float, float]:
    """
    (max upper violation, max lower violation): the sup norms of
    (u-ū)₊, (v-v̄)₊ and of (u̲-u)₊, (v̲-v)₊.
    """
    u, v = state.u.values, state.v.values
    upper = max(np.max(u - bounds.u_upper.values, initial=0.0), np.max(v - bounds.v_upper.values, initial=0.0))
    lower = max(np.max(bounds.u_lower.values - u, initial=0.0), np.max(bounds.v_lower.values - v, initial=0.0))
    return float(max(upper, 0.0)), float(max(lower, 0.0))


def coercivity_constants(ctx: NonlinearityContext, lambda1: float) -> Tuple[float, float]:
    """
    C₁, C₂ of ⟨B(w), w⟩ ≥ ‖w‖² - C₁‖w‖ - C₂‖w‖^{l+1}, ‖·‖ the discrete H¹₀
    norm, from the bounds of H₁/G₁, the band size, the domain measure and
    the discrete Poincaré constant 1/√λ₁.
    """
    assert ctx.bounds is not None
    grid = ctx.bounds.grid
    l = ctx.spec.penalty_exponent
    measure = float(np.sum(grid.weights))
    c_p = 1.0 / np.sqrt(lambda1)

    k_h, k_g = boundedness_constants(ctx)
    b_u = float(np.max(np.abs(ctx.bounds.u_upper.values)))
    b_v = float(np.max(np.abs(ctx.bounds.v_upper.values)))

    c1 = np.sqrt(2.0) * max(k_h + b_u**l, k_g + b_v**l) * np.sqrt(measure) * c_p
    c2 = 2.0 * measure ** ((1.0 - l) / 2.0) * c_p ** (l + 1.0)
    return float(c1), float(c2)


def finalize_report(report: SolveReport, system: SystemRhs, state: StatePair) -> SolveReport:
    if system.bounds is not None:
        report.ordering = ordering_check(state, system.bounds)
    if isinstance(system, TruncatedSystem):
        report.penalty = penalty_maxima(system.ctx, state.u, state.v)
    return report


def require_positive_eps(system: SystemRhs) -> None:
    if isinstance(system, TruncatedSystem) and not system.eps > 0:
        raise DomainError(f"solves of the regularised system need eps > 0, got {system.eps}")


def default_initial_state(system: SystemRhs, grid: Optional[Grid] = None) -> StatePair:
    """the subsolution when the system carries bounds, zero otherwise"""
    if system.bounds is not None:
        return system.bounds.lower
    grid = grid or getattr(system, "grid", None)
    if grid is None:
        raise SpecError("an initial state or a grid is required for systems without bounds")
    return StatePair.zeros(grid)


def picard_solve(
    ctx: Context, config: SolverConfig, initial_state: Optional[StatePair] = None, grid: Optional[Grid] = None
) -> Tuple[StatePair, SolveReport]:
    """
    Damped Picard iteration

        (u, v) <- (1-θ)(u, v) + θ (solve_poisson(H₂(u, v, ∇u, ∇v)), solve_poisson(G₂(...)))

    from the initial state (the subsolution by default) until the sup norm
    of the residual is below config.tol. Non-convergence is reported, not
    raised; the returned state is then the best iterate seen.
    """
    system = as_system(ctx)
    require_positive_eps(system)
    if initial_state is None:
        initial_state = default_initial_state(system, grid)
    grid = initial_state.grid
    theta = config.theta

    # Dirichlet projection of the start
    u = lift(grid, initial_state.u.interior)
    v = lift(grid, initial_state.v.interior)
    state = StatePair(u, v)

    history: List[float] = []
    pairing: List[float] = []
    best, best_res = state, float("inf")
    converged = False
    message = ""
    steps = 0

    while True:
        f, g, r_u, r_v = _evaluate(system, state)
        res = _sup(r_u, r_v)
        history.append(res)
        pairing.append(_pairing(state, state, f, g))
        debug(f"picard it={steps} residual={res:.3e}", config.debug)

        if not np.isfinite(res):
            message = f"residual became non-finite at iteration {steps}"
            break
        if res < best_res:
            best, best_res = state, res
        if res <= config.tol:
            converged = True
            break
        if steps == config.max_iter:
            message = f"no convergence in {config.max_iter} iterations (residual {res:.3e})"
            break

        w_u = solve_poisson(grid, lift(grid, f))
        w_v = solve_poisson(grid, lift(grid, g))
        state = StatePair(
            ScalarField(grid, (1.0 - theta) * state.u.values + theta * w_u.values),
            ScalarField(grid, (1.0 - theta) * state.v.values + theta * w_v.values),
        )
        steps += 1

    report = SolveReport(
        converged=converged,
        iterations=steps,
        residual_history=history,
        method=SolverMethod.PICARD.value,
        theta=theta,
        eps=system.eps,
        pairing_history=pairing,
        message=message,
    )
    final = state if converged else best
    return final, finalize_report(report, system, final)


def solve(
    ctx: Context, config: SolverConfig, initial_state: Optional[StatePair] = None, grid: Optional[Grid] = None
) -> Tuple[StatePair, SolveReport]:
    """dispatch on config.method"""
    if config.method == SolverMethod.DENSE_NEWTON:
        from .newton import dense_newton_solve

        return dense_newton_solve(ctx, config, initial_state, grid=grid)
    return picard_solve(ctx, config, initial_state, grid=grid)


__all__ = [
    "SolverConfig",
    "SolverMethod",
    "SolveReport",
    "coercivity_constants",
    "ordering_check",
    "pairing_B",
    "picard_solve",
    "residual",
    "residual_norm",
    "solve",
]
