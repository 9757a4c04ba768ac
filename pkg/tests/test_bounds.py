import math

import numpy as np
import pytest

from subsup.bounds import (
    BoundsPair,
    SupersolutionForm,
    build_bounds,
    build_subsolution,
    build_supersolution,
    certify_schedule,
    verify_subsolution,
    verify_supersolution,
)
from subsup.bounds.torsion import enclosing_grid, torsion_function
from subsup.exceptions import BoundsError
from subsup.grid import ScalarField, apply_laplacian, build_grid
from subsup.problem import ConvectionSpec, ProblemSpec, StatePair
from subsup.spectral import first_eigenpair

NO_CONVECTION = ConvectionSpec("constant", 0.0)


@pytest.fixture
def eig(unit_interval):
    return first_eigenpair(unit_interval)


def test_subsolution_without_convection(unit_interval, eig):
    spec = ProblemSpec(g1=NO_CONVECTION, g2=NO_CONVECTION)
    delta, pair = build_subsolution(unit_interval, spec, eig, eps_max=1.0)

    assert 0 < delta <= 1
    assert np.all(pair.u.interior > 0)
    assert pair.u.is_dirichlet()

    # the defining inequality, node by node
    lap = apply_laplacian(unit_interval, pair.u).values
    for i in unit_interval.interior_nodes:
        w = pair.u.values[i]
        rhs = (w * w + 1.0) ** -0.25 - math.sqrt(w)
        assert lap[i] <= rhs + 1e-12


def test_subsolution_fails_once_scaled_up(unit_interval, eig):
    spec = ProblemSpec(g1=NO_CONVECTION, g2=NO_CONVECTION)
    delta, _ = build_subsolution(unit_interval, spec, eig, eps_max=1.0)

    passed = []
    for k in range(40):
        seed = eig.phi1.scaled(delta * 2**k)
        passed.append(verify_subsolution(unit_interval, spec, StatePair(seed, seed), 1.0).passed)
    assert passed[0]
    assert not all(passed)
    # once it fails it keeps failing
    first_fail = passed.index(False)
    assert not any(passed[first_fail:])


@pytest.mark.parametrize(
    "g",
    [ConvectionSpec("constant", 0.3), ConvectionSpec("gaussian-decay", 0.5), ConvectionSpec("rational-decay", 1.0)],
)
def test_convection_only_helps_the_subsolution(unit_interval, eig, g):
    plain = ProblemSpec(g1=NO_CONVECTION, g2=NO_CONVECTION)
    _, pair = build_subsolution(unit_interval, plain, eig, eps_max=1.0)

    assert verify_subsolution(unit_interval, ProblemSpec(g1=g, g2=g), pair, 1.0).passed


def test_large_subsolution_candidate_fails(unit_interval, eig):
    spec = ProblemSpec(beta1=0.9, beta2=0.9, g1=NO_CONVECTION, g2=NO_CONVECTION)
    seed = eig.phi1.scaled(1e6)
    report = verify_subsolution(unit_interval, spec, StatePair(seed, seed), 1.0)

    assert not report.passed
    assert report.worst_margin < 0
    assert report.worst_node in unit_interval.interior_nodes


def test_large_constant_supersolution_passes(unit_interval, standard_spec):
    big = ScalarField.constant(unit_interval, 1e6)
    report = verify_supersolution(unit_interval, standard_spec, StatePair(big, big), 0.0)
    assert report.passed
    assert report.kind == "super"


def test_constant_supersolution(unit_interval, eig, standard_spec):
    _, lower = build_subsolution(unit_interval, standard_spec, eig, eps_max=1.0)
    M, upper, form = build_supersolution(unit_interval, standard_spec, lower)

    assert form == SupersolutionForm.CONSTANT
    # the scalar inequality M^β ≥ (M²)^{-α/2} + ‖g‖∞
    assert M**0.5 >= (M * M) ** -0.25 + 0.3
    assert np.all(upper.u.values >= lower.u.values)
    assert np.all(upper.v.values == M)


def test_torsion_supersolution_for_plus(unit_interval, eig):
    spec = ProblemSpec(alpha1=0.0, alpha2=0.0, beta1=0.0, beta2=0.0, sign="plus", g1=NO_CONVECTION, g2=NO_CONVECTION)
    _, lower = build_subsolution(unit_interval, spec, eig, eps_max=1.0)
    e = torsion_function(enclosing_grid(unit_interval), unit_interval)
    M, upper, form = build_supersolution(unit_interval, spec, lower, e)

    # -Δ(M e) = M must cover 1 + 1
    assert form == SupersolutionForm.TORSION
    assert 2 <= M <= 4
    assert np.all(upper.u.values >= lower.u.values)


def test_torsion_form_needs_the_torsion_function(unit_interval, eig):
    spec = ProblemSpec(sign="plus")
    _, lower = build_subsolution(unit_interval, spec, eig, eps_max=1.0)
    with pytest.raises(BoundsError):
        build_supersolution(unit_interval, spec, lower)


def test_build_bounds_minus(interval_bounds):
    assert interval_bounds.violations() == []
    assert interval_bounds.form == SupersolutionForm.CONSTANT
    assert interval_bounds.delta > 0

    d = interval_bounds.to_dict()
    assert d["form"] == "constant"
    assert d["M"] == interval_bounds.M


def test_build_bounds_plus_on_square(unit_square):
    g = ConvectionSpec("gaussian-decay", 0.5)
    spec = ProblemSpec(sign="plus", g1=g, g2=g)
    bounds = build_bounds(unit_square, spec, first_eigenpair(unit_square), eps_max=1.0)

    assert bounds.form == SupersolutionForm.TORSION
    assert bounds.violations() == []
    # torsion form stays positive up to the boundary
    assert np.all(bounds.u_upper.values > 0)


def test_minus_falls_back_to_the_torsion_form(unit_interval, eig):
    # β = 0 and g ≥ 1: every constant pair leaves 1/M^α - 1 + 1.5 > 0 unbalanced
    g = ConvectionSpec("constant", 1.5)
    spec = ProblemSpec(beta1=0.0, beta2=0.0, g1=g, g2=g)
    bounds = build_bounds(unit_interval, spec, eig, eps_max=1.0)

    assert bounds.form == SupersolutionForm.TORSION
    assert bounds.M > 0
    assert bounds.violations() == []
    assert np.all(bounds.u_upper.values > 0)
    assert np.all(bounds.u_upper.values >= bounds.u_lower.values)

    for sub, sup in certify_schedule(unit_interval, spec, bounds, [1.0, 0.5, 1 / 64, 1e-4]):
        assert sub.passed and sup.passed


def test_certificates_hold_along_the_schedule(interval_bounds, standard_spec, unit_interval):
    eps_values = [1.0, 0.5, 0.2, 0.1, 1 / 64, 1e-4]
    reports = certify_schedule(unit_interval, standard_spec, interval_bounds, eps_values)

    assert len(reports) == len(eps_values)
    for sub, sup in reports:
        assert sub.passed and sup.passed
        assert sub.kind == "sub"
        assert sup.kind == "super"


def test_violations_are_reported(unit_interval):
    lo = ScalarField.constant(unit_interval, 1.0)
    hi = ScalarField.constant(unit_interval, 0.5)
    pair = BoundsPair.from_pairs(StatePair(lo, lo), StatePair(hi, hi))

    broken = pair.violations()
    assert "subsolution exceeds supersolution" in broken
    assert "subsolution does not vanish on the boundary" in broken


def test_builder_input_checks(unit_interval, eig, standard_spec):
    with pytest.raises(BoundsError):
        build_subsolution(unit_interval, standard_spec, eig, eps_max=0.0)
    with pytest.raises(BoundsError):
        build_subsolution(build_grid("interval", [(0, 1)], 9), standard_spec, eig, eps_max=1.0)
