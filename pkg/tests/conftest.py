import sys

import pytest

from subsup.bounds import build_bounds
from subsup.cli import run_cli
from subsup.grid import build_grid
from subsup.problem import ConvectionSpec, ProblemSpec
from subsup.spectral import first_eigenpair


class CliExit(RuntimeError):
    def __init__(self, args, code):
        self.args = args
        self.code = code


@pytest.fixture
def cli(capsys):
    # captures sys
    def inner(*args):
        sys.argv = ["subsup"]
        sys.argv.extend(args)
        try:
            run_cli()
            return capsys.readouterr()
        except SystemExit as e:
            raise CliExit(args=capsys.readouterr(), code=e.code)

    return inner


@pytest.fixture
def unit_interval():
    return build_grid("interval", [(0, 1)], 33)


@pytest.fixture
def unit_square():
    return build_grid("rectangle", [(0, 1), (0, 1)], 17)


@pytest.fixture
def standard_spec():
    # α = β = 1/2, sign minus, g₁ = g₂ ≡ 0.3
    g = ConvectionSpec("constant", 0.3)
    return ProblemSpec(g1=g, g2=g)


@pytest.fixture
def interval_bounds(unit_interval, standard_spec):
    eig = first_eigenpair(unit_interval)
    return build_bounds(unit_interval, standard_spec, eig, eps_max=1.0)
