import numpy as np
import pytest

from subsup.bounds import build_bounds
from subsup.exceptions import SpecError
from subsup.grid import build_grid
from subsup.problem import ConvectionSpec, ProblemSpec, StatePair
from subsup.solver import SolverConfig, picard_solve
from subsup.solver.newton import dense_newton_solve
from subsup.spectral import first_eigenpair
from subsup.truncation import ConstantRhs, NonlinearityContext

from .utils import sin_field


@pytest.fixture(scope="module")
def ctx():
    grid = build_grid("interval", [(0, 1)], 65)
    g = ConvectionSpec("constant", 0.3)
    spec = ProblemSpec(g1=g, g2=g)
    bounds = build_bounds(grid, spec, first_eigenpair(grid), eps_max=1.0)
    return NonlinearityContext(spec, bounds, 1.0)


@pytest.fixture(scope="module")
def newton(ctx):
    return dense_newton_solve(ctx, SolverConfig(method="dense-newton", tol=1e-10))


def test_zero_nonlinearity(unit_interval):
    start = StatePair(sin_field(unit_interval), sin_field(unit_interval))
    state, report = dense_newton_solve(ConstantRhs(unit_interval), SolverConfig(), start)

    # the problem is linear; a second step may be needed to clean up rounding
    assert report.converged
    assert 1 <= report.iterations <= 2
    assert np.max(np.abs(state.u.values)) <= 1e-10
    assert report.method == "dense-newton"


def test_agrees_with_picard(ctx, newton):
    state, report = newton
    reference, picard = picard_solve(ctx, SolverConfig(theta=0.5, tol=1e-10))

    assert report.converged and picard.converged
    assert state.sup_distance(reference) <= 1e-8
    assert max(report.ordering) <= 1e-8


def test_fast_local_convergence(newton):
    _, report = newton
    history = report.residual_history

    assert len(history) == report.iterations + 1
    assert len(history) >= 3
    assert report.iterations <= 15
    # every tail step at least squares the residual, up to a constant
    for a, b in zip(history[-3:], history[-2:]):
        assert b <= max(100 * a * a, 1e-10)


def test_size_limit(unit_square):
    with pytest.raises(SpecError):
        dense_newton_solve(ConstantRhs(unit_square), SolverConfig(), grid=unit_square, max_unknowns=100)
