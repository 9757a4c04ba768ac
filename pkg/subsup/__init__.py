from .bounds import BoundsPair, CertReport, build_bounds, certify_schedule, verify_subsolution, verify_supersolution
from .continuation import ContinuationReport, ContinuationSchedule, run_continuation
from .grid import Grid, ScalarField, VectorField, build_grid, solve_poisson
from .problem import ConvectionKind, ConvectionSpec, ProblemSpec, Sign, StatePair
from .solver import SolverConfig, SolveReport, pairing_B, residual, solve
from .spectral import EigenPair, first_eigenpair
from .truncation import NonlinearityContext, TruncatedSystem
from .version import __version__

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "build_grid",
    "solve_poisson",
    "EigenPair",
    "first_eigenpair",
    "ProblemSpec",
    "ConvectionSpec",
    "ConvectionKind",
    "Sign",
    "StatePair",
    "BoundsPair",
    "CertReport",
    "build_bounds",
    "certify_schedule",
    "verify_subsolution",
    "verify_supersolution",
    "NonlinearityContext",
    "TruncatedSystem",
    "SolverConfig",
    "SolveReport",
    "solve",
    "residual",
    "pairing_B",
    "ContinuationSchedule",
    "ContinuationReport",
    "run_continuation",
    "__version__",
]
