import numpy as np
import pytest

from subsup.exceptions import EigenError, SpecError
from subsup.grid import apply_laplacian, build_grid
from subsup.spectral import first_eigenpair


def test_unit_interval():
    g = build_grid("interval", [(0, 1)], 65)
    eig = first_eigenpair(g)

    assert eig.lambda1 == pytest.approx(np.pi**2, rel=0.005)
    x = g.node_coords[:, 0]
    assert np.max(np.abs(eig.phi1.values - np.sin(np.pi * x))) < 1e-3


def test_unit_square():
    g = build_grid("rectangle", [(0, 1), (0, 1)], 65)
    eig = first_eigenpair(g)
    assert eig.lambda1 == pytest.approx(2 * np.pi**2, rel=0.005)


def test_longer_interval_has_smaller_eigenvalue():
    short = first_eigenpair(build_grid("interval", [(0, 1)], 65))
    long = first_eigenpair(build_grid("interval", [(0, 2)], 129))

    assert long.lambda1 == pytest.approx(np.pi**2 / 4, rel=0.005)
    assert long.lambda1 < short.lambda1


def test_eigenfunction_invariants(unit_square):
    eig = first_eigenpair(unit_square)
    phi = eig.phi1

    assert eig.lambda1 > 0
    assert np.all(phi.interior > 0)
    assert phi.is_dirichlet()
    assert np.max(np.abs(phi.values)) == pytest.approx(1.0)

    lap = apply_laplacian(unit_square, phi)
    assert np.max(np.abs(lap.interior - eig.lambda1 * phi.interior)) < 1e-7


def test_rayleigh_quotient_does_not_increase(unit_square):
    history = first_eigenpair(unit_square).rayleigh_history
    assert len(history) >= 2
    assert all(b <= a * (1 + 1e-12) for a, b in zip(history, history[1:]))


def test_iteration_budget():
    g = build_grid("rectangle", [(0, 1), (0, 1)], 33)
    with pytest.raises(EigenError) as e:
        first_eigenpair(g, tol=1e-14, max_iters=1)
    assert e.value.iterations == 1


@pytest.mark.parametrize("tol", [0.0, -1e-10])
def test_tolerance_must_be_positive(unit_interval, tol):
    with pytest.raises(SpecError):
        first_eigenpair(unit_interval, tol=tol)
