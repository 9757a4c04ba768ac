import numpy as np
import pytest

from subsup.bounds import build_bounds
from subsup.continuation import random_dirichlet_pair
from subsup.exceptions import DomainError, SpecError
from subsup.grid import ScalarField, build_grid, h1_seminorm, integrate, solve_poisson
from subsup.problem import ConvectionSpec, ProblemSpec, StatePair
from subsup.solver import (
    SolverConfig,
    SolverMethod,
    coercivity_constants,
    ordering_check,
    pairing_B,
    picard_solve,
    residual,
    residual_norm,
    solve,
)
from subsup.spectral import first_eigenpair
from subsup.truncation import ConstantRhs, NonlinearityContext, TruncatedSystem

from .utils import constant_bounds, sin_field

NO_CONVECTION = ConvectionSpec("constant", 0.0)


@pytest.fixture(scope="module")
def standard():
    """(S₁)₋ on the unit interval, 65 nodes, g₁ = g₂ ≡ 0.3, ε = 1"""
    grid = build_grid("interval", [(0, 1)], 65)
    g = ConvectionSpec("constant", 0.3)
    spec = ProblemSpec(g1=g, g2=g)
    eig = first_eigenpair(grid)
    bounds = build_bounds(grid, spec, eig, eps_max=1.0)
    return grid, eig, NonlinearityContext(spec, bounds, 1.0)


@pytest.fixture(scope="module")
def standard_solution(standard):
    _, _, ctx = standard
    return picard_solve(ctx, SolverConfig(theta=0.5, tol=1e-10))


def test_residual_below_the_band(unit_interval):
    # branch 1 with γ₁(0) = -1: r_u = -((1+1)^{-1/4} - 1 + 0 + 1)
    spec = ProblemSpec(g1=NO_CONVECTION, g2=NO_CONVECTION)
    ctx = NonlinearityContext(spec, constant_bounds(unit_interval, 1.0, 2.0), 1.0)
    r = residual(ctx, StatePair.zeros(unit_interval))

    assert np.allclose(r.u.interior, -(2**-0.25))
    assert np.allclose(r.v.interior, -(2**-0.25))
    assert r.u.is_dirichlet()
    assert r.v.is_dirichlet()


def test_pairing_of_the_zero_nonlinearity(unit_square):
    rng = np.random.default_rng(3)
    state = random_dirichlet_pair(unit_square, rng)
    zero = ConstantRhs(unit_square)

    expected = h1_seminorm(unit_square, state.u) ** 2 + h1_seminorm(unit_square, state.v) ** 2
    assert pairing_B(zero, state, state) == pytest.approx(expected, rel=1e-10)
    assert pairing_B(zero, state, StatePair.zeros(unit_square)) == 0.0


def test_pairing_matches_the_residual(interval_bounds, standard_spec):
    rng = np.random.default_rng(4)
    grid = interval_bounds.grid
    ctx = NonlinearityContext(standard_spec, interval_bounds, 0.5)
    state = interval_bounds.lower
    r = residual(ctx, state)

    for _ in range(20):
        test = random_dirichlet_pair(grid, rng)
        p = pairing_B(ctx, state, test)
        q = integrate(grid, ScalarField(grid, r.u.values * test.u.values)) + integrate(
            grid, ScalarField(grid, r.v.values * test.v.values)
        )
        assert p == pytest.approx(q, rel=1e-9, abs=1e-9)


def test_pairing_rejects_foreign_test_pairs(interval_bounds, standard_spec):
    ctx = NonlinearityContext(standard_spec, interval_bounds, 0.5)
    other = StatePair.zeros(build_grid("interval", [(0, 1)], 9))
    with pytest.raises(SpecError):
        pairing_B(ctx, interval_bounds.lower, other)


def test_coercivity(interval_bounds, standard_spec):
    rng = np.random.default_rng(5)
    grid = interval_bounds.grid
    ctx = NonlinearityContext(standard_spec, interval_bounds, 0.25)
    c1, c2 = coercivity_constants(ctx, first_eigenpair(grid).lambda1)
    l = standard_spec.penalty_exponent

    for scale in [1e-3, 1e-1, 1.0, 10.0, 100.0]:
        state = random_dirichlet_pair(grid, rng).scaled(scale)
        norm = np.sqrt(h1_seminorm(grid, state.u) ** 2 + h1_seminorm(grid, state.v) ** 2)
        assert pairing_B(ctx, state, state) >= norm**2 - c1 * norm - c2 * norm ** (l + 1) - 1e-9


def test_zero_nonlinearity_converges_in_one_step(unit_interval):
    state, report = picard_solve(
        ConstantRhs(unit_interval), SolverConfig(theta=1.0), StatePair(sin_field(unit_interval), sin_field(unit_interval))
    )

    assert report.converged
    assert report.iterations == 1
    assert len(report.residual_history) == report.iterations + 1
    assert np.all(state.u.values == 0)


def test_frozen_rhs_gives_the_torsion_problem(unit_square):
    state, report = picard_solve(ConstantRhs(unit_square, 1.0, 1.0), SolverConfig(theta=1.0), grid=unit_square)

    assert report.converged
    assert report.iterations == 1
    torsion = solve_poisson(unit_square, ScalarField.constant(unit_square, 1.0))
    assert np.allclose(state.u.values, torsion.values, rtol=0, atol=1e-14)


def test_standard_instance(standard, standard_solution):
    grid, _, ctx = standard
    state, report = standard_solution

    assert report.converged
    assert report.final_residual <= 1e-10
    assert len(report.residual_history) == report.iterations + 1
    assert len(report.pairing_history) == len(report.residual_history)
    assert report.eps == 1.0

    # in the band, the penalty is off and the raw system is solved too
    upper, lower = report.ordering
    assert upper <= 1e-8 and lower <= 1e-8
    assert max(report.penalty) <= 1e-10
    assert residual_norm(TruncatedSystem(ctx, raw=True), state) <= 1e-9

    d = report.to_dict()
    assert d["method"] == "picard"
    assert d["final_residual"] == report.final_residual


@pytest.mark.parametrize("theta", [1.0, 0.25])
def test_damping_lands_on_the_same_solution(standard, standard_solution, theta):
    _, _, ctx = standard
    reference, _ = standard_solution
    state, report = picard_solve(ctx, SolverConfig(theta=theta, tol=1e-10))

    assert report.converged
    assert state.sup_distance(reference) <= 1e-8


def test_picard_without_regularisation(interval_bounds, standard_spec):
    ctx = NonlinearityContext(standard_spec, interval_bounds, 0.0)
    with pytest.raises(DomainError):
        picard_solve(ctx, SolverConfig())


def test_non_convergence_is_reported(standard):
    _, _, ctx = standard
    _, report = picard_solve(ctx, SolverConfig(theta=0.5, max_iter=2))

    assert not report.converged
    assert report.iterations == 2
    assert "no convergence" in report.message
    assert report.final_residual > 0


def test_ordering_check(interval_bounds):
    grid = interval_bounds.grid
    mid = StatePair(
        ScalarField(grid, (interval_bounds.u_lower.values + interval_bounds.u_upper.values) / 2),
        ScalarField(grid, (interval_bounds.v_lower.values + interval_bounds.v_upper.values) / 2),
    )
    assert ordering_check(mid, interval_bounds) == (0.0, 0.0)

    above = StatePair(
        ScalarField(grid, interval_bounds.u_upper.values + 1.0),
        ScalarField(grid, interval_bounds.v_upper.values),
    )
    upper, lower = ordering_check(above, interval_bounds)
    assert upper == pytest.approx(1.0)
    assert lower == 0.0


def test_solver_config():
    assert SolverConfig(method="dense-newton").method == SolverMethod.DENSE_NEWTON

    for kwargs in [{"theta": 0.0}, {"theta": 1.5}, {"tol": 0.0}, {"max_iter": 0}, {"method": "gmres"}]:
        with pytest.raises(SpecError):
            SolverConfig(**kwargs)


def test_solve_dispatches_on_method(unit_interval):
    zero = ConstantRhs(unit_interval)
    start = StatePair(sin_field(unit_interval), sin_field(unit_interval))

    _, picard = solve(zero, SolverConfig(theta=1.0), start)
    _, newton = solve(zero, SolverConfig(method="dense-newton"), start)
    assert picard.method == "picard"
    assert newton.method == "dense-newton"
