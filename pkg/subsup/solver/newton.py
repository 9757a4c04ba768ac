"""
Dense Newton oracle for small grids.

The Jacobian of the nodal residual is built column by column with forward
differences and factorised densely, so this only scales to a couple of
thousand unknowns. It exists to cross-check `picard_solve`.
"""

from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import SpecError
from ..grid import Grid
from ..problem import StatePair
from ..utils import debug
from . import (
    Context,
    SolveReport,
    SolverConfig,
    SolverMethod,
    _evaluate,
    _pairing,
    _sup,
    as_system,
    default_initial_state,
    finalize_report,
    lift,
    require_positive_eps,
)

MAX_UNKNOWNS = 2000
FD_STEP = 1e-6
MAX_LINE_SEARCH = 30


def dense_newton_solve(
    ctx: Context,
    config: SolverConfig,
    initial_state: Optional[StatePair] = None,
    grid: Optional[Grid] = None,
    max_unknowns: int = MAX_UNKNOWNS,
) -> Tuple[StatePair, SolveReport]:
    """
    Newton on the interior unknowns (u, v) with a halving line search that
    accepts the first step decreasing the sup norm of the residual.
    config.theta is ignored.
    """
    system = as_system(ctx)
    require_positive_eps(system)
    if initial_state is None:
        initial_state = default_initial_state(system, grid)
    grid = initial_state.grid
    n = grid.n_interior

    if 2 * n > max_unknowns:
        raise SpecError(f"dense Newton is limited to {max_unknowns} unknowns, grid has {2 * n}")

    def unpack(x: np.ndarray) -> StatePair:
        return StatePair(lift(grid, x[:n]), lift(grid, x[n:]))

    def F(x: np.ndarray) -> np.ndarray:
        _, _, r_u, r_v = _evaluate(system, unpack(x))
        return np.concatenate([r_u, r_v])

    x = np.concatenate([initial_state.u.interior, initial_state.v.interior])
    history: List[float] = []
    pairing: List[float] = []
    converged = False
    message = ""
    steps = 0

    r = F(x)
    while True:
        res = _sup(r[:n], r[n:])
        history.append(res)
        state = unpack(x)
        f, g, _, _ = _evaluate(system, state)
        pairing.append(_pairing(state, state, f, g))
        debug(f"newton it={steps} residual={res:.3e}", config.debug)

        if not np.isfinite(res):
            message = f"residual became non-finite at iteration {steps}"
            break
        if res <= config.tol:
            converged = True
            break
        if steps == config.max_iter:
            message = f"no convergence in {config.max_iter} iterations (residual {res:.3e})"
            break

        J = np.empty((2 * n, 2 * n))
        for j in range(2 * n):
            step = FD_STEP * max(1.0, abs(x[j]))
            xj = x.copy()
            xj[j] += step
            J[:, j] = (F(xj) - r) / step

        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            message = f"singular Jacobian at iteration {steps}"
            break

        lam = 1.0
        for _ in range(MAX_LINE_SEARCH):
            x_try = x + lam * dx
            r_try = F(x_try)
            if _sup(r_try[:n], r_try[n:]) < res:
                break
            lam /= 2.0
        else:
            message = f"line search stagnated at iteration {steps} (residual {res:.3e})"
            break

        x, r = x_try, r_try
        steps += 1

    report = SolveReport(
        converged=converged,
        iterations=steps,
        residual_history=history,
        method=SolverMethod.DENSE_NEWTON.value,
        theta=1.0,
        eps=system.eps,
        pairing_history=pairing,
        message=message,
    )
    final = unpack(x)
    return final, finalize_report(report, system, final)
