import argparse as ap
import shutil
from typing import Any, Dict, Tuple

width = min(120, shutil.get_terminal_size().columns - 2)

COMMANDS = ["eigen", "torsion", "bounds", "solve", "continue", "run", "truncation-table"]


def formatter(prog: str) -> ap.RawDescriptionHelpFormatter:
    return ap.RawDescriptionHelpFormatter(prog, width=width)


def _scenario_arg(parser: ap.ArgumentParser) -> None:
    parser.add_argument(
        "--spec-file",
        "-f",
        dest="spec_file",
        action="store",
        required=True,
        metavar="PATH",
        help="scenario file describing domain, problem and solver settings",
    )


def _solver_args(parser: ap.ArgumentParser) -> None:
    parser.add_argument(
        "--theta",
        dest="theta",
        action="store",
        type=float,
        required=False,
        default=None,
        help="Picard damping in (0,1], overrides solver.theta",
    )

    parser.add_argument(
        "--tol",
        dest="tol",
        action="store",
        type=float,
        required=False,
        default=None,
        help="sup-norm residual tolerance, overrides solver.tol",
    )

    parser.add_argument(
        "--max-iter",
        dest="max_iter",
        action="store",
        type=int,
        required=False,
        default=None,
        help="maximum outer iterations, overrides solver.max_iter",
    )

    parser.add_argument(
        "--method",
        dest="method",
        action="store",
        choices=["picard", "dense-newton"],
        required=False,
        default=None,
        help="nonlinear solver, overrides solver.method",
    )


def setup(raw_args: Any = None) -> Tuple[Any, Dict[str, Any]]:
    parser = ap.ArgumentParser(
        prog="subsup",
        description="Sub/supersolution pipeline for singular elliptic systems with convection terms.",
        formatter_class=formatter,
    )

    parser.add_argument(
        "--debug",
        dest="debug",
        action="store_true",
        required=False,
        default=False,
        help="print solver diagnostics to stderr and show full tracebacks",
    )

    parser.add_argument(
        "--version",
        dest="version",
        action="store_true",
        required=False,
        default=False,
        help="print the current version and terminate",
    )

    parser.add_argument(
        "--color",
        dest="color",
        action="store_true",
        required=False,
        default=False,
        help="preserve colors when redirecting to pipe or file",
    )

    parser.add_argument(
        "--output",
        "-o",
        dest="output",
        action="store",
        required=False,
        default=None,
        metavar="DIR",
        help="output directory, overrides SUBSUP_OUTPUT_DIR and output.dir (default ./subsup-out)",
    )

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    eigen = sub.add_parser(
        "eigen",
        help="first Dirichlet eigenpair of the discrete Laplacian",
        formatter_class=formatter,
    )
    _scenario_arg(eigen)
    eigen.add_argument(
        "--tol",
        dest="tol",
        action="store",
        type=float,
        required=False,
        default=1e-10,
        help="relative Rayleigh quotient tolerance (default 1e-10)",
    )
    eigen.add_argument(
        "--max-iter",
        dest="max_iter",
        action="store",
        type=int,
        required=False,
        default=10000,
        help="iteration budget (default 10000)",
    )

    torsion = sub.add_parser(
        "torsion",
        help="torsion function of the enclosing ball, restricted to the domain",
        formatter_class=formatter,
    )
    _scenario_arg(torsion)
    torsion.add_argument(
        "--ball-factor",
        dest="ball_factor",
        action="store",
        type=float,
        required=False,
        default=None,
        help="enclosing ball radius in units of the domain circumradius, overrides bounds.ball_factor",
    )
    torsion.add_argument(
        "--own",
        dest="own",
        action="store_true",
        required=False,
        default=False,
        help="solve -Δe = 1 on the domain itself instead of the enclosing ball",
    )

    bounds = sub.add_parser(
        "bounds",
        help="build and certify the sub/supersolution pair",
        formatter_class=formatter,
    )
    _scenario_arg(bounds)

    solve = sub.add_parser(
        "solve",
        help="solve the truncated system at one ε",
        formatter_class=formatter,
    )
    _scenario_arg(solve)
    solve.add_argument(
        "--eps",
        dest="eps",
        action="store",
        type=float,
        required=False,
        default=None,
        help="regularisation parameter (default: 1/n for the first scheduled n)",
    )
    _solver_args(solve)

    cont = sub.add_parser(
        "continue",
        help="run the ε = 1/n continuation ladder",
        formatter_class=formatter,
    )
    _scenario_arg(cont)
    cont.add_argument(
        "--schedule",
        dest="schedule",
        action="store",
        required=False,
        default=None,
        metavar="N,N,...",
        help="strictly increasing list of n, overrides schedule.n",
    )
    _solver_args(cont)

    run = sub.add_parser(
        "run",
        help="full pipeline with invariant gates for one or more scenarios",
        formatter_class=formatter,
        description="""\
Runs grid -> eigenpair -> bounds -> continuation -> verification for every
scenario given and writes fields CSV, report JSON, convergence table and a
plain-text summary to <output>/<scenario name>/.

exit codes: 0 all gates passed, 2 a gate failed, 3 no convergence, 4 bad scenario""",
    )
    run.add_argument(
        "scenarios",
        nargs="+",
        metavar="SCENARIO",
        help="scenario files",
    )
    run.add_argument(
        "--jobs",
        "-j",
        dest="jobs",
        action="store",
        type=int,
        required=False,
        default=1,
        help="run independent scenarios in this many worker threads",
    )

    table = sub.add_parser(
        "truncation-table",
        help="branch ids and values of H₁, H₂, G₁, G₂ over an (s, t) lattice at one node",
        formatter_class=formatter,
    )
    _scenario_arg(table)
    table.add_argument(
        "--node",
        dest="node",
        action="store",
        type=int,
        required=False,
        default=None,
        help="node index (default: the interior node nearest the domain center)",
    )
    table.add_argument(
        "--eps",
        dest="eps",
        action="store",
        type=float,
        required=False,
        default=None,
        help="regularisation parameter (default: 1/n for the first scheduled n)",
    )
    table.add_argument(
        "--s-range",
        dest="s_range",
        action="store",
        required=False,
        default=None,
        metavar="LO,HI,COUNT",
        help="s lattice (default spans the band at the node with margin)",
    )
    table.add_argument(
        "--t-range",
        dest="t_range",
        action="store",
        required=False,
        default=None,
        metavar="LO,HI,COUNT",
        help="t lattice (default spans the band at the node with margin)",
    )

    args = vars(parser.parse_args(raw_args))

    return (parser, args)
