import numpy as np
import pytest

from subsup.bounds import build_bounds
from subsup.continuation import (
    DEFAULT_SCHEDULE,
    ContinuationSchedule,
    apriori_check,
    cauchy_tail_ok,
    evaluate_gates,
    hardy_sobolev_probe,
    run_continuation,
    solve_rung,
    structural_checks,
)
from subsup.exceptions import ConvergenceError, SpecError
from subsup.grid import ScalarField, build_grid, h1_seminorm, integrate
from subsup.problem import ConvectionSpec, ProblemSpec, StatePair
from subsup.solver import SolverConfig, solve
from subsup.spectral import first_eigenpair
from subsup.truncation import NonlinearityContext

NO_CONVECTION = ConvectionSpec("constant", 0.0)


@pytest.fixture(scope="module")
def ladder():
    """the interval instance with g ≡ 0.3 along n = 1, 2, 4"""
    grid = build_grid("interval", [(0, 1)], 33)
    g = ConvectionSpec("constant", 0.3)
    spec = ProblemSpec(g1=g, g2=g)
    bounds = build_bounds(grid, spec, first_eigenpair(grid), eps_max=1.0)
    config = SolverConfig(tol=1e-10)
    report = run_continuation(grid, spec, bounds, ContinuationSchedule((1, 2, 4)), config)
    return grid, spec, bounds, config, report


def test_schedule():
    schedule = ContinuationSchedule()
    assert schedule.n_values == DEFAULT_SCHEDULE
    assert schedule.eps_max == 1.0
    assert schedule.eps_values[-1] == 1 / 64

    parsed = ContinuationSchedule.parse("1, 2,4")
    assert parsed.n_values == (1, 2, 4)
    assert len(parsed) == 3


@pytest.mark.parametrize("text", ["", "2,1", "1,1", "0,1", "1,x", "1.5"])
def test_invalid_schedule(text):
    with pytest.raises(SpecError):
        ContinuationSchedule.parse(text)


def test_single_rung(interval_bounds, standard_spec, unit_interval):
    report = run_continuation(
        unit_interval, standard_spec, interval_bounds, ContinuationSchedule((1,)), SolverConfig(tol=1e-10)
    )

    assert len(report.rungs) == 1
    assert report.rungs[0].cauchy is None
    assert report.cauchy_differences == []
    assert report.rungs[0].solve.converged
    assert report.final_raw_residual <= 1e-9
    assert not report.stopped_early


def test_ladder(ladder):
    grid, spec, bounds, config, report = ladder

    assert [r.n for r in report.rungs] == [1, 2, 4]
    assert len(report.states) == len(report.rungs)
    assert report.final_state is report.states[-1]
    assert len(report.cauchy_differences) == 2

    for rung, state in zip(report.rungs, report.states):
        assert rung.solve.converged
        assert max(rung.solve.ordering) <= 1e-8
        assert max(rung.solve.penalty) <= 1e-10
        assert min(rung.slack_u, rung.slack_v) >= -1e-6
        assert rung.h1_u == pytest.approx(h1_seminorm(grid, state.u))
        # symmetric data, symmetric solution
        assert rung.symmetric_gap <= 1e-8

    # the convection distance to the final rung vanishes on the final rung
    assert report.rungs[-1].convection_l2 == (0.0, 0.0)
    assert report.final_raw_residual <= 10 * config.tol


def test_gates(ladder):
    _, _, _, config, report = ladder
    gates = {g.name: g for g in evaluate_gates(report, config)}

    assert list(gates) == [
        "rung convergence",
        "band confinement",
        "penalty inactivity",
        "a priori bounds",
        "cauchy tail",
        "raw residual",
    ]
    for name in ["rung convergence", "band confinement", "penalty inactivity", "a priori bounds", "raw residual"]:
        assert gates[name].passed, name

    d = gates["raw residual"].to_dict()
    assert isinstance(d["passed"], bool)
    assert d["threshold"] == 10 * config.tol


def test_structural_checks(ladder):
    _, spec, bounds, _, report = ladder
    ctx = NonlinearityContext(spec, bounds, report.rungs[-1].eps)
    gates = structural_checks(ctx, report.final_state, seed=1, samples=100)

    assert [g.name for g in gates] == ["integration by parts", "pairing consistency", "maximum principle"]
    assert all(g.passed for g in gates)


def test_warm_start_is_only_an_optimisation(ladder):
    _, spec, bounds, config, report = ladder
    warm, warm_report, _ = solve_rung(spec, bounds, 0.5, config, report.states[0])
    cold, cold_report, _ = solve_rung(spec, bounds, 0.5, config)

    assert warm_report.converged and cold_report.converged
    assert warm.sup_distance(cold) <= 1e-7
    assert warm_report.iterations <= cold_report.iterations


def test_eps_independent_system():
    # (t² + ε)⁰ = 1: every rung solves -Δu = -Δv = 2
    grid = build_grid("interval", [(0, 1)], 33)
    spec = ProblemSpec(
        alpha1=0.0, alpha2=0.0, beta1=0.0, beta2=0.0, sign="plus", g1=NO_CONVECTION, g2=NO_CONVECTION
    )
    bounds = build_bounds(grid, spec, first_eigenpair(grid), eps_max=1.0)
    config = SolverConfig(tol=1e-10)

    full = run_continuation(grid, spec, bounds, ContinuationSchedule((1, 2, 4)), config, early_stop=False)
    assert len(full.rungs) == 3
    assert all(d <= config.tol for d in full.cauchy_differences)
    x = grid.node_coords[:, 0]
    assert np.allclose(full.final_state.u.values, x * (1 - x), atol=1e-9)

    stopped = run_continuation(grid, spec, bounds, ContinuationSchedule((1, 2, 4)), config)
    assert stopped.stopped_early
    assert [r.n for r in stopped.rungs] == [1, 2]


def test_failed_rung_carries_the_partial_report(interval_bounds, standard_spec, unit_interval):
    config = SolverConfig(tol=1e-10, max_iter=1)
    with pytest.raises(ConvergenceError) as e:
        run_continuation(unit_interval, standard_spec, interval_bounds, ContinuationSchedule((1, 2)), config)

    assert e.value.report is not None
    assert e.value.report.rungs == []
    assert "damping retries" in str(e.value)


def test_rung_outside_the_band_aborts(interval_bounds, standard_spec, unit_interval, monkeypatch):
    def leaky_solve(ctx, config, initial_state=None):
        state, report = solve(ctx, config, initial_state)
        if ctx.eps < 1.0:
            report.ordering = (1e-6, 0.0)
        return state, report

    monkeypatch.setattr("subsup.continuation.solve", leaky_solve)
    with pytest.raises(ConvergenceError) as e:
        run_continuation(
            unit_interval, standard_spec, interval_bounds, ContinuationSchedule((1, 2)), SolverConfig(tol=1e-10)
        )

    assert "rung n=2" in str(e.value)
    assert "left the band" in str(e.value)
    # the first rung stayed inside and is kept
    assert [r.n for r in e.value.report.rungs] == [1]


def test_symmetric_gap_needs_a_symmetric_system(unit_interval):
    spec = ProblemSpec(alpha1=0.3, g1=ConvectionSpec("constant", 0.3), g2=ConvectionSpec("constant", 0.3))
    assert not spec.is_symmetric

    bounds = build_bounds(unit_interval, spec, first_eigenpair(unit_interval), eps_max=1.0)
    report = run_continuation(unit_interval, spec, bounds, ContinuationSchedule((1,)), SolverConfig(tol=1e-10))
    assert report.rungs[0].symmetric_gap is None
    assert report.rungs[0].to_dict()["symmetric_gap"] is None


def test_apriori_check(ladder):
    grid, spec, bounds, _, report = ladder
    assert apriori_check(grid, spec, bounds, StatePair.zeros(grid)) == (0.0, 0.0)

    state = report.final_state
    slack_u, _ = apriori_check(grid, spec, bounds, state)
    assert slack_u >= -1e-6

    # both sides are exact in the scaling: slack(k·w) = k·R - k²·L
    lhs = h1_seminorm(grid, state.u) ** 2
    rhs = slack_u + lhs
    k = 2 * rhs / lhs
    scaled_u, _ = apriori_check(grid, spec, bounds, state.scaled(k))
    assert scaled_u == pytest.approx(k * rhs - k * k * lhs, rel=1e-9)
    assert scaled_u < 0


def test_apriori_bound_is_loose(ladder):
    # the right-hand side exceeds twice the energy here, so doubling the
    # solution keeps the slack positive; only k > R/L violates the bound
    grid, spec, bounds, _, report = ladder
    state = report.final_state
    slack_u, slack_v = apriori_check(grid, spec, bounds, state)

    doubled_u, doubled_v = apriori_check(grid, spec, bounds, state.scaled(2.0))
    lhs = h1_seminorm(grid, state.u) ** 2
    assert doubled_u == pytest.approx(2 * (slack_u + lhs) - 4 * lhs, rel=1e-9)
    assert doubled_u > 0
    assert doubled_v > 0


def test_hardy_sobolev_probe(ladder):
    grid, _, bounds, _, report = ladder
    u = report.final_state.u

    assert hardy_sobolev_probe(grid, ScalarField.zeros(grid), bounds.v_lower, 0.5) == 0.0
    assert hardy_sobolev_probe(grid, u, bounds.v_lower, 0.0) == pytest.approx(
        integrate(grid, u) / h1_seminorm(grid, u)
    )
    # a singular weight only makes the ratio larger
    assert hardy_sobolev_probe(grid, u, bounds.v_lower, 0.5) > hardy_sobolev_probe(grid, u, bounds.v_lower, 0.0)


@pytest.mark.parametrize(
    "differences, expected",
    [
        ([], True),
        ([0.3], True),
        ([0.3, 0.2, 0.1], True),
        ([0.1, 0.2, 0.3], False),
        ([5.0, 0.3, 0.2, 0.1], True),
        ([0.1, 0.2, 1e-10], True),
        ([0.2, 0.2], False),
    ],
)
def test_cauchy_tail(differences, expected):
    assert cauchy_tail_ok(differences, 1e-10) == expected


@pytest.mark.slow
@pytest.mark.parametrize("sign", ["minus", "plus"])
def test_square_pipeline(sign):
    grid = build_grid("rectangle", [(0, 1), (0, 1)], 33)
    g = ConvectionSpec("gaussian-decay", 0.5)
    spec = ProblemSpec(sign=sign, g1=g, g2=g)
    bounds = build_bounds(grid, spec, first_eigenpair(grid), eps_max=1.0)
    config = SolverConfig(tol=1e-10)
    report = run_continuation(grid, spec, bounds, ContinuationSchedule(), config)

    assert [r.n for r in report.rungs] == list(DEFAULT_SCHEDULE)
    gates = evaluate_gates(report, config)
    assert len(gates) == 6
    for gate in gates:
        assert gate.passed, f"{gate.name}: {gate.detail}"

    tail = report.cauchy_differences[-3:]
    assert tail[0] > tail[1] > tail[2]
    assert report.final_raw_residual <= 1e-9
