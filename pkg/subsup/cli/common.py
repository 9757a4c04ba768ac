"""
Subcommand implementations. Every command loads one scenario, runs the part
of the pipeline it names and writes its artifacts to <output>/<scenario>/.
Errors propagate as SubsupException subclasses; `exit_code` maps them to
the process exit status.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..bounds import BoundsPair, build_bounds, certify_schedule
from ..bounds.torsion import enclosing_grid, solve_torsion, torsion_function
from ..continuation import (
    ContinuationReport,
    ContinuationSchedule,
    GateResult,
    evaluate_gates,
    run_continuation,
    structural_checks,
)
from ..exceptions import (
    BoundsError,
    ConvergenceError,
    DomainError,
    EigenError,
    GateFailure,
    GridError,
    LinearSolveError,
    ScenarioError,
    SpecError,
    SubsupException,
)
from ..grid import Grid
from ..grid.io import FLOAT_FORMAT, write_field_csv
from ..solver import SolverConfig, solve
from ..spectral import EigenPair, first_eigenpair
from ..truncation import NonlinearityContext, truncation_table
from ..types import CertReportDict, RunReportDict
from ..utils import check_mark, cl, get_output_dir, pretty_format
from .config import ScenarioConfig, load_scenario
from .report import gate_lines, rung_table, summary_text, write_continuation, write_fields, write_json

EXIT_OK = 0
EXIT_GATE = 2
EXIT_CONVERGENCE = 3
EXIT_CONFIG = 4

TABLE_POINTS = 9


def exit_code(e: BaseException) -> int:
    if isinstance(e, (GateFailure, BoundsError)):
        return EXIT_GATE
    if isinstance(e, (ConvergenceError, EigenError, LinearSolveError)):
        return EXIT_CONVERGENCE
    if isinstance(e, (ScenarioError, SpecError, GridError, DomainError)):
        return EXIT_CONFIG
    # unexpected library errors count as gate failures
    return EXIT_GATE


def apply_overrides(config: ScenarioConfig, args: Dict[str, Any]) -> ScenarioConfig:
    """command line values win over the scenario file"""
    solver: Dict[str, Any] = {}
    for key in ["theta", "tol", "max_iter", "method"]:
        if args.get(key) is not None:
            solver[key] = args[key]
    if args.get("debug"):
        solver["debug"] = True

    changes: Dict[str, Any] = {}
    if solver:
        # replace() re-runs the SolverConfig validation
        changes["solver"] = replace(config.solver, **solver)
    if args.get("schedule") is not None:
        changes["schedule"] = ContinuationSchedule.parse(args["schedule"])
    if args.get("ball_factor") is not None:
        changes["ball_factor"] = args["ball_factor"]
    return replace(config, **changes) if changes else config


def _load(args: Dict[str, Any]) -> ScenarioConfig:
    return apply_overrides(load_scenario(args["spec_file"]), args)


def scenario_dir(config: ScenarioConfig, flag: Optional[str] = None) -> Path:
    return Path(get_output_dir(flag, config.output_dir)) / config.name


def _eigen_dict(eig: EigenPair) -> Dict[str, Any]:
    return {
        "lambda1": eig.lambda1,
        "iterations": eig.iterations,
        "residual": eig.residual,
        "rayleigh_history": list(eig.rayleigh_history),
    }


def _bounds_fields(bounds: BoundsPair) -> Dict[str, Any]:
    return {
        "u_lower": bounds.u_lower,
        "v_lower": bounds.v_lower,
        "u_upper": bounds.u_upper,
        "v_upper": bounds.v_upper,
    }


def _written(paths: List[str]) -> None:
    for p in paths:
        print(f"{cl.FGGRAY}   wrote {p}{cl.ENDC}")


def _certificate_gate(certificates: List[Tuple[Any, Any]]) -> GateResult:
    worst = min(min(sub.worst_margin, sup.worst_margin) for sub, sup in certificates)
    failed = [f"{c.kind} at eps={c.eps:.4g}" for pair in certificates for c in pair if not c.passed]
    return GateResult(
        "eps-uniform certificates",
        not failed,
        worst,
        0.0,
        detail=", ".join(failed),
    )


def cmd_eigen(args: Dict[str, Any]) -> int:
    config = _load(args)
    eig = first_eigenpair(config.grid, tol=args["tol"], max_iters=args["max_iter"])
    out = scenario_dir(config, args["output"])

    print(
        f"{cl.OKGREEN} ✓ {cl.ENDC}λ₁ = {cl.OKCYAN}{eig.lambda1:.12g}{cl.ENDC} "
        f"after {eig.iterations} iterations (residual {eig.residual:.3e})"
    )
    _written(
        [
            write_field_csv(out / "phi1.csv", eig.phi1),
            write_json(out / "eigen.json", _eigen_dict(eig)),
        ]
    )
    return EXIT_OK


def cmd_torsion(args: Dict[str, Any]) -> int:
    config = _load(args)
    grid = config.grid
    out = scenario_dir(config, args["output"])

    if args["own"]:
        e = solve_torsion(grid)
        label = "domain"
    else:
        e = torsion_function(enclosing_grid(grid, config.ball_factor), grid)
        label = f"ball {config.ball_factor:g}x circumradius"

    interior = e.interior
    print(
        f"{cl.OKGREEN} ✓ {cl.ENDC}torsion ({label}): max {cl.OKCYAN}{float(np.max(e.values)):.12g}{cl.ENDC}, "
        f"min over interior {float(np.min(interior)) if interior.size else 0.0:.6g}"
    )
    _written([write_field_csv(out / "torsion.csv", e)])
    return EXIT_OK


def _bounds_for(config: ScenarioConfig) -> Tuple[EigenPair, BoundsPair]:
    eig = first_eigenpair(config.grid)
    bounds = build_bounds(config.grid, config.spec, eig, config.schedule.eps_max, ball_factor=config.ball_factor)
    return eig, bounds


def cmd_bounds(args: Dict[str, Any]) -> int:
    config = _load(args)
    out = scenario_dir(config, args["output"])
    eig, bounds = _bounds_for(config)
    certificates = certify_schedule(config.grid, config.spec, bounds, config.schedule.eps_values)
    gate = _certificate_gate(certificates)

    print(f"subsolution δ = {cl.OKCYAN}{bounds.delta:.12g}{cl.ENDC}")
    print(f"supersolution M = {cl.OKCYAN}{bounds.M:.12g}{cl.ENDC} ({bounds.form.value} form)")
    for sub, sup in certificates:
        print(
            f"{check_mark(sub.passed and sup.passed)}eps={sub.eps:<10.4g} "
            f"sub margin {sub.worst_margin:.3e}  super margin {sup.worst_margin:.3e}"
        )

    fields = dict(_bounds_fields(bounds), phi1=eig.phi1)
    _written(
        [
            write_fields(out / "bounds.csv", fields),
            write_json(
                out / "bounds.json",
                {
                    "bounds": bounds.to_dict(),
                    "certificates": [[sub.to_dict(), sup.to_dict()] for sub, sup in certificates],
                },
            ),
        ]
    )
    if not gate.passed:
        raise GateFailure(gate.name, gate.detail)
    return EXIT_OK


def cmd_solve(args: Dict[str, Any]) -> int:
    config = _load(args)
    out = scenario_dir(config, args["output"])
    eps = args["eps"] if args["eps"] is not None else config.schedule.eps_max

    _, bounds = _bounds_for(config)
    ctx = NonlinearityContext(config.spec, bounds, eps)
    state, report = solve(ctx, config.solver)

    mark = check_mark(report.converged)
    print(
        f"{mark}{report.method} eps={eps:.6g}: {report.iterations} iterations, "
        f"residual {cl.OKCYAN}{report.final_residual:.3e}{cl.ENDC}"
    )
    if report.ordering is not None:
        print(f"   ordering violation {max(report.ordering):.3e}")

    _written(
        [
            write_fields(out / "solve.csv", dict(_bounds_fields(bounds), u=state.u, v=state.v)),
            write_json(out / "solve.json", report.to_dict()),
        ]
    )
    if not report.converged:
        raise ConvergenceError(f"eps={eps:.6g}: {report.message}")
    return EXIT_OK


def cmd_continue(args: Dict[str, Any]) -> int:
    config = _load(args)
    out = scenario_dir(config, args["output"])
    eig, bounds = _bounds_for(config)

    try:
        report = run_continuation(config.grid, config.spec, bounds, config.schedule, config.solver)
    except ConvergenceError as e:
        if isinstance(e.report, ContinuationReport) and e.report.rungs:
            _written(write_continuation(out, e.report, bounds, {"phi1": eig.phi1}))
        raise

    print(rung_table(report), end="")
    if report.stopped_early:
        print(f"stopped early at n={report.rungs[-1].n}, rung differences flattened")
    _written(write_continuation(out, report, bounds, {"phi1": eig.phi1}))
    return EXIT_OK


def _parse_range(text: Optional[str], lo: float, hi: float) -> np.ndarray:
    if text is None:
        return np.linspace(lo, hi, TABLE_POINTS)
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        a, b, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise SpecError(f'range must be "LO,HI,COUNT", got "{text}"')
    if len(parts) != 3 or count < 1 or not b >= a:
        raise SpecError(f'range must be "LO,HI,COUNT" with LO <= HI and COUNT >= 1, got "{text}"')
    return np.linspace(a, b, count)


def center_node(grid: Grid) -> int:
    """the interior node nearest the domain center"""
    idx = grid.interior_nodes
    r = np.linalg.norm(grid.node_coords[idx] - np.asarray(grid.center), axis=1)
    return int(idx[int(np.argmin(r))])


def cmd_truncation_table(args: Dict[str, Any]) -> int:
    config = _load(args)
    grid = config.grid
    out = scenario_dir(config, args["output"])
    eps = args["eps"] if args["eps"] is not None else config.schedule.eps_max

    node = args["node"] if args["node"] is not None else center_node(grid)
    if node not in set(grid.interior_nodes.tolist()):
        raise SpecError(f"node {node} is not an interior node")

    _, bounds = _bounds_for(config)
    ctx = NonlinearityContext(config.spec, bounds, eps)

    def band(lower: float, upper: float) -> Tuple[float, float]:
        margin = 0.25 * (upper - lower)
        return lower - margin, upper + margin

    s = _parse_range(args["s_range"], *band(bounds.u_lower.values[node], bounds.u_upper.values[node]))
    t = _parse_range(args["t_range"], *band(bounds.v_lower.values[node], bounds.v_upper.values[node]))
    frame = truncation_table(ctx, node, s, t)

    fmt = lambda v: f"{v:.6g}"  # noqa: E731
    order = [
        {"key": "s", "header": "s", "fmt": fmt, "align": "right"},
        {"key": "t", "header": "t", "fmt": fmt, "align": "right"},
        {"key": "h_branch", "header": "H", "align": "right", "clr": cl.OKCYAN},
        {"key": "h1", "header": "H₁", "fmt": fmt, "align": "right"},
        {"key": "h2", "header": "H₂", "fmt": fmt, "align": "right"},
        {"key": "g_branch", "header": "G", "align": "right", "clr": cl.OKCYAN},
        {"key": "g1", "header": "G₁", "fmt": fmt, "align": "right"},
        {"key": "g2", "header": "G₂", "fmt": fmt, "align": "right"},
    ]
    print(f"node {node} at {tuple(float(c) for c in grid.node_coords[node])}, eps={eps:.6g}")
    print(pretty_format(frame.to_dict("records"), order), end="")

    path = out / f"truncation_node{node}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    _written([str(path)])
    return EXIT_OK


@dataclass
class ScenarioResult:
    name: str
    code: int
    report: Optional[RunReportDict] = None
    summary: str = ""
    error: Optional[str] = None


def run_scenario(config: ScenarioConfig, output_dir: Path) -> Tuple[int, RunReportDict]:
    """
    Full pipeline for one scenario: grid, eigenpair, bounds with explicit
    certificates at every scheduled ε, continuation, gates and structural
    checks. Writes fields.csv, report.json, convergence.csv and summary.txt
    to output_dir. Returns (0, report) when every gate passed and
    (2, report) otherwise; errors of earlier stages are raised.
    """
    grid = config.grid
    spec = config.spec
    eig = first_eigenpair(grid)
    bounds = build_bounds(grid, spec, eig, config.schedule.eps_max, ball_factor=config.ball_factor)
    certificates = certify_schedule(grid, spec, bounds, config.schedule.eps_values)

    run: RunReportDict = {
        "scenario": config.name,
        "grid": grid.descriptor(),
        "spec": spec.to_dict(),
        "eigen": _eigen_dict(eig),
        "bounds": bounds.to_dict(),
        "certificates": [[_cert(sub), _cert(sup)] for sub, sup in certificates],
        "gates": [],
        "passed": False,
    }

    try:
        report = run_continuation(grid, spec, bounds, config.schedule, config.solver)
    except ConvergenceError as e:
        if isinstance(e.report, ContinuationReport) and e.report.rungs:
            write_continuation(output_dir, e.report, bounds, {"phi1": eig.phi1})
            run["continuation"] = e.report.to_dict()
        write_json(output_dir / "report.json", run)
        raise

    gates = [_certificate_gate(certificates)]
    gates += evaluate_gates(report, config.solver)
    final = report.final_state
    assert final is not None
    ctx = NonlinearityContext(spec, bounds, report.rungs[-1].eps)
    gates += structural_checks(ctx, final, seed=config.seed)

    failed = next((g.name for g in gates if not g.passed), None)
    run["continuation"] = report.to_dict()
    run["gates"] = [g.to_dict() for g in gates]
    run["passed"] = failed is None
    run["failed_gate"] = failed

    write_continuation(output_dir, report, bounds, {"phi1": eig.phi1})
    write_json(output_dir / "report.json", run)
    with open(output_dir / "summary.txt", "w") as f:
        f.write(summary_text(config.name, bounds, report, gates, failed))

    return (EXIT_OK if failed is None else EXIT_GATE), run


def _cert(c: Any) -> CertReportDict:
    return c.to_dict()


def _run_one(path: str, flag: Optional[str], debug: bool) -> ScenarioResult:
    name = Path(path).stem
    try:
        config = load_scenario(path)
        if debug:
            config = replace(config, solver=replace(config.solver, debug=True))
        out = scenario_dir(config, flag)
        out.mkdir(parents=True, exist_ok=True)
        code, report = run_scenario(config, out)
    except SubsupException as e:
        return ScenarioResult(name, exit_code(e), error=f"{type(e).__name__}: {e}")

    gates = [GateResult(g["name"], g["passed"], g["value"], g["threshold"], g["detail"]) for g in report["gates"]]
    return ScenarioResult(name, code, report=report, summary=gate_lines(gates))


def cmd_run(args: Dict[str, Any]) -> int:
    paths: List[str] = args["scenarios"]
    jobs = max(1, int(args["jobs"]))

    def one(path: str) -> ScenarioResult:
        return _run_one(path, args["output"], bool(args["debug"]))

    if jobs == 1 or len(paths) == 1:
        results = [one(p) for p in paths]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, paths))

    # report in argument order once everything has finished
    for r in results:
        print(f"{cl.BOLD}{r.name}{cl.ENDC}")
        if r.summary:
            print(r.summary)
        if r.error:
            print(f"{cl.FAIL} ✗ {cl.ENDC}{r.error}")
        elif r.report is not None and r.report.get("failed_gate"):
            print(f"{cl.FAIL} ✗ {cl.ENDC}first failed gate: {r.report['failed_gate']}")
        print(f"{check_mark(r.code == EXIT_OK)}exit {r.code}")

    return max(r.code for r in results)


COMMAND_HANDLERS = {
    "eigen": cmd_eigen,
    "torsion": cmd_torsion,
    "bounds": cmd_bounds,
    "solve": cmd_solve,
    "continue": cmd_continue,
    "run": cmd_run,
    "truncation-table": cmd_truncation_table,
}
