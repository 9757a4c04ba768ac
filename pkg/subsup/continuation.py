"""
The ε = 1/n ladder: solve the truncated system for increasing n, each rung
warm-started from the previous one, and collect the quantities that certify
the limit (a priori bounds, band confinement, H¹ Cauchy tail).

`evaluate_gates` turns a finished report into pass/fail gates; the
structural gates re-verify the discretisation with random test pairs.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .bounds import BoundsPair
from .exceptions import ConvergenceError, SpecError
from .grid import (
    Grid,
    ScalarField,
    apply_laplacian,
    grad_inner,
    h1_seminorm,
    integrate,
    l2_norm,
    solve_poisson,
)
from .problem import ProblemSpec, Sign, StatePair
from .solver import SolveReport, SolverConfig, pairing_B, residual, residual_norm, solve
from .truncation import NonlinearityContext, TruncatedSystem
from .types import ContinuationReportDict, GateDict, RungReportDict
from .utils import debug

DEFAULT_SCHEDULE = (1, 2, 4, 8, 16, 32, 64)
MAX_RETRIES = 4

ORDERING_TOL = 1e-8
PENALTY_TOL = 1e-10
APRIORI_TOL = 1e-6
IDENTITY_RTOL = 1e-9


@dataclass(frozen=True)
class ContinuationSchedule:
    n_values: Tuple[int, ...] = DEFAULT_SCHEDULE

    def __post_init__(self) -> None:
        values = tuple(self.n_values)
        if not values:
            raise SpecError("schedule must not be empty")
        for n in values:
            if int(n) != n or n < 1:
                raise SpecError(f"schedule entries must be positive integers, got {n}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise SpecError(f"schedule must be strictly increasing, got {list(values)}")
        object.__setattr__(self, "n_values", tuple(int(n) for n in values))

    @classmethod
    def parse(cls, text: str) -> "ContinuationSchedule":
        try:
            return cls(tuple(int(p) for p in text.replace(" ", "").split(",") if p))
        except ValueError:
            raise SpecError(f'schedule must be a comma separated list of integers, got "{text}"')

    @property
    def eps_values(self) -> List[float]:
        return [1.0 / n for n in self.n_values]

    @property
    def eps_max(self) -> float:
        return 1.0 / self.n_values[0]

    def __len__(self) -> int:
        return len(self.n_values)


@dataclass
class RungReport:
    n: int
    eps: float
    solve: SolveReport
    retries: int = 0
    h1_u: float = 0.0
    h1_v: float = 0.0
    slack_u: float = 0.0
    slack_v: float = 0.0
    sharp_slack_u: float = 0.0
    sharp_slack_v: float = 0.0
    hardy_u: float = 0.0
    hardy_v: float = 0.0
    # max |u - v|, only recorded when the system is symmetric under u <-> v
    symmetric_gap: Optional[float] = None
    # H¹ distance to the previous rung, None on the first one
    cauchy: Optional[float] = None
    convection_l2: Tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> RungReportDict:
        return {
            "n": self.n,
            "eps": self.eps,
            "retries": self.retries,
            "h1_u": self.h1_u,
            "h1_v": self.h1_v,
            "slack_u": self.slack_u,
            "slack_v": self.slack_v,
            "sharp_slack_u": self.sharp_slack_u,
            "sharp_slack_v": self.sharp_slack_v,
            "hardy_u": self.hardy_u,
            "hardy_v": self.hardy_v,
            "symmetric_gap": self.symmetric_gap,
            "cauchy": self.cauchy,
            "convection_l2": list(self.convection_l2),
            "solve": self.solve.to_dict(),
        }


@dataclass
class ContinuationReport:
    schedule: ContinuationSchedule
    rungs: List[RungReport] = field(default_factory=list)
    states: List[StatePair] = field(default_factory=list, repr=False)
    final_raw_residual: float = float("nan")
    stopped_early: bool = False

    @property
    def final_state(self) -> Optional[StatePair]:
        return self.states[-1] if self.states else None

    @property
    def cauchy_differences(self) -> List[float]:
        return [r.cauchy for r in self.rungs if r.cauchy is not None]

    def to_dict(self) -> ContinuationReportDict:
        return {
            "schedule": list(self.schedule.n_values),
            "executed": [r.n for r in self.rungs],
            "stopped_early": self.stopped_early,
            "final_raw_residual": self.final_raw_residual,
            "cauchy_differences": self.cauchy_differences,
            "rungs": [r.to_dict() for r in self.rungs],
        }


def _interior_field(grid: Grid, values: np.ndarray) -> ScalarField:
    return ScalarField(grid, np.where(grid.interior_mask, values, 0.0))


def _weighted(grid: Grid, f: ScalarField, weight: ScalarField, alpha: float) -> float:
    # ∫ f / weight^α over interior nodes, weight > 0 there
    idx = grid.interior_nodes
    values = np.zeros(grid.n_nodes)
    values[idx] = f.values[idx] / weight.values[idx] ** alpha
    return integrate(grid, ScalarField(grid, values))


def apriori_check(grid: Grid, spec: ProblemSpec, bounds: BoundsPair, state: StatePair) -> Tuple[float, float]:
    """
    Slacks of the a priori bounds a solution in the band satisfies,

        ‖u‖² ≤ ∫ u/v̲^{α₁} + ‖g₁‖∞ ∫|u|   (+ ∫ v̄^{β₁} u for sign plus)

    and the v analog; a negative slack means the bound is violated.
    """
    slacks = []
    for w, lower, upper, alpha, beta, g in [
        (state.u, bounds.v_lower, bounds.v_upper, spec.alpha1, spec.beta1, spec.g1),
        (state.v, bounds.u_lower, bounds.u_upper, spec.alpha2, spec.beta2, spec.g2),
    ]:
        rhs = _weighted(grid, w, lower, alpha) + g.sup_norm * integrate(grid, ScalarField(grid, np.abs(w.values)))
        if spec.sign == Sign.PLUS:
            rhs += integrate(grid, ScalarField(grid, upper.values**beta * w.values))
        slacks.append(rhs - grad_inner(grid, w, w))
    return slacks[0], slacks[1]


def sharp_apriori_check(grid: Grid, spec: ProblemSpec, state: StatePair) -> Tuple[float, float]:
    """
    The intermediate bound with the solution itself in the weight and the
    actual convection term: ‖u‖² ≤ ∫ u/v^{α₁} + ∫ g₁(∇u, ∇v) u (+ ∫ v^{β₁} u
    for sign plus), and the v analog.
    """
    du, dv = state.gradients()
    slacks = []
    for w, other, alpha, beta, g in [
        (state.u, state.v, spec.alpha1, spec.beta1, spec.g1),
        (state.v, state.u, spec.alpha2, spec.beta2, spec.g2),
    ]:
        conv = _interior_field(grid, g(du.values, dv.values) * w.values)
        rhs = _weighted(grid, w, other, alpha) + integrate(grid, conv)
        if spec.sign == Sign.PLUS:
            rhs += integrate(grid, _interior_field(grid, np.abs(other.values) ** beta * w.values))
        slacks.append(rhs - grad_inner(grid, w, w))
    return slacks[0], slacks[1]


def hardy_sobolev_probe(grid: Grid, state_component: ScalarField, weight_field: ScalarField, alpha: float) -> float:
    """∫ u / w^α divided by the H¹₀ seminorm of u; 0 for the zero field"""
    norm = h1_seminorm(grid, state_component)
    if norm == 0:
        return 0.0
    return _weighted(grid, state_component, weight_field, alpha) / norm


def h1_distance(grid: Grid, a: StatePair, b: StatePair) -> float:
    du = ScalarField(grid, a.u.values - b.u.values)
    dv = ScalarField(grid, a.v.values - b.v.values)
    return float(np.sqrt(h1_seminorm(grid, du) ** 2 + h1_seminorm(grid, dv) ** 2))


def _convection_fields(grid: Grid, spec: ProblemSpec, state: StatePair) -> Tuple[ScalarField, ScalarField]:
    du, dv = state.gradients()
    return (
        _interior_field(grid, spec.g1(du.values, dv.values)),
        _interior_field(grid, spec.g2(du.values, dv.values)),
    )


def solve_rung(
    spec: ProblemSpec,
    bounds: BoundsPair,
    eps: float,
    config: SolverConfig,
    initial_state: Optional[StatePair] = None,
) -> Tuple[StatePair, SolveReport, int]:
    """
    One rung with damping retries: θ is halved after every failed attempt,
    up to MAX_RETRIES times. Returns the state, the last report and the
    number of retries; the report says converged=False if all failed.
    """
    ctx = NonlinearityContext(spec, bounds, eps)
    retries = 0
    while True:
        state, report = solve(ctx, config, initial_state)
        if report.converged or retries == MAX_RETRIES:
            return state, report, retries
        retries += 1
        config = replace(config, theta=config.theta / 2.0)
        debug(f"eps={eps:.6g}: retrying with theta={config.theta:.6g} ({report.message})")


def run_continuation(
    grid: Grid,
    spec: ProblemSpec,
    bounds: BoundsPair,
    schedule: ContinuationSchedule,
    solver_config: SolverConfig,
    early_stop: bool = True,
) -> ContinuationReport:
    """
    Solve the truncated system along the schedule. The first rung starts from
    the subsolution, every later one from the previous rung. With early_stop
    the ladder ends once the H¹ rung-to-rung difference falls below ten times
    the solver tolerance.

    Raises ConvergenceError (carrying the partial report) when a rung does not
    converge after all damping retries.
    """
    report = ContinuationReport(schedule=schedule)
    state = bounds.lower

    for n, eps in zip(schedule.n_values, schedule.eps_values):
        new_state, solve_report, retries = solve_rung(spec, bounds, eps, solver_config, state)
        if not solve_report.converged:
            raise ConvergenceError(
                f"rung n={n} (eps={eps:.6g}) did not converge after {retries} damping retries: {solve_report.message}",
                report=report,
            )
        worst_order = max(solve_report.ordering or (0.0, 0.0))
        if worst_order > ORDERING_TOL:
            raise ConvergenceError(
                f"rung n={n} (eps={eps:.6g}) left the band [lower, upper] by {worst_order:.3e}",
                report=report,
            )

        rung = RungReport(n=n, eps=eps, solve=solve_report, retries=retries)
        rung.h1_u = h1_seminorm(grid, new_state.u)
        rung.h1_v = h1_seminorm(grid, new_state.v)
        rung.slack_u, rung.slack_v = apriori_check(grid, spec, bounds, new_state)
        rung.sharp_slack_u, rung.sharp_slack_v = sharp_apriori_check(grid, spec, new_state)
        rung.hardy_u = hardy_sobolev_probe(grid, new_state.u, bounds.v_lower, spec.alpha1)
        rung.hardy_v = hardy_sobolev_probe(grid, new_state.v, bounds.u_lower, spec.alpha2)
        if spec.is_symmetric:
            rung.symmetric_gap = float(np.max(np.abs(new_state.u.values - new_state.v.values)))
        if report.states:
            rung.cauchy = h1_distance(grid, new_state, report.states[-1])

        report.rungs.append(rung)
        report.states.append(new_state)
        state = new_state
        debug(
            f"rung n={n}: iterations={solve_report.iterations} residual={solve_report.final_residual:.3e} "
            f"cauchy={rung.cauchy}"
        )

        if early_stop and rung.cauchy is not None and rung.cauchy <= 10 * solver_config.tol:
            report.stopped_early = n != schedule.n_values[-1]
            break

    final = report.states[-1]
    final_g1, final_g2 = _convection_fields(grid, spec, final)
    for rung, s in zip(report.rungs, report.states):
        g1, g2 = _convection_fields(grid, spec, s)
        rung.convection_l2 = (
            l2_norm(grid, ScalarField(grid, g1.values - final_g1.values)),
            l2_norm(grid, ScalarField(grid, g2.values - final_g2.values)),
        )

    last = report.rungs[-1]
    raw = TruncatedSystem(NonlinearityContext(spec, bounds, last.eps), raw=True)
    report.final_raw_residual = residual_norm(raw, final)
    return report


@dataclass
class GateResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> GateDict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "threshold": float(self.threshold),
            "detail": self.detail,
        }


def cauchy_tail_ok(differences: Sequence[float], tol: float) -> bool:
    """
    The last three differences decrease, or the ladder has flattened below
    ten times the solver tolerance. Shorter ladders only need to decrease.
    """
    if not differences:
        return True
    if differences[-1] <= 10 * tol:
        return True
    tail = list(differences[-3:])
    return all(b < a for a, b in zip(tail, tail[1:]))


def evaluate_gates(report: ContinuationReport, config: SolverConfig) -> List[GateResult]:
    """the invariant gates of a finished ladder, in a fixed order"""
    rungs = report.rungs
    worst_residual = max(r.solve.final_residual for r in rungs)
    worst_order = max(max(r.solve.ordering or (0.0, 0.0)) for r in rungs)
    worst_penalty = max(max(r.solve.penalty or (0.0, 0.0)) for r in rungs)
    worst_slack = min(min(r.slack_u, r.slack_v) for r in rungs)
    diffs = report.cauchy_differences
    tail = diffs[-1] if diffs else 0.0

    return [
        GateResult(
            "rung convergence",
            all(r.solve.converged for r in rungs) and worst_residual <= config.tol,
            worst_residual,
            config.tol,
        ),
        GateResult("band confinement", worst_order <= ORDERING_TOL, worst_order, ORDERING_TOL),
        GateResult("penalty inactivity", worst_penalty <= PENALTY_TOL, worst_penalty, PENALTY_TOL),
        GateResult("a priori bounds", worst_slack >= -APRIORI_TOL, worst_slack, -APRIORI_TOL),
        GateResult(
            "cauchy tail",
            cauchy_tail_ok(diffs, config.tol),
            tail,
            10 * config.tol,
            detail=", ".join(f"{d:.3e}" for d in diffs[-3:]),
        ),
        GateResult(
            "raw residual",
            report.final_raw_residual <= 10 * config.tol,
            report.final_raw_residual,
            10 * config.tol,
        ),
    ]


def random_dirichlet_pair(grid: Grid, rng: np.random.Generator) -> StatePair:
    return StatePair(
        _interior_field(grid, rng.standard_normal(grid.n_nodes)),
        _interior_field(grid, rng.standard_normal(grid.n_nodes)),
    )


def structural_checks(ctx: NonlinearityContext, state: StatePair, seed: int = 0, samples: int = 100) -> List[GateResult]:
    """
    Re-verify the discretisation on random Dirichlet-zero pairs:
    summation by parts, consistency of the pairing with the residual and
    the discrete maximum principle.
    """
    grid = state.grid
    rng = np.random.default_rng(seed)

    ibp_worst = 0.0
    pairing_worst = 0.0
    negative = 0.0
    r = residual(ctx, state)
    for _ in range(samples):
        a = random_dirichlet_pair(grid, rng)
        b = random_dirichlet_pair(grid, rng)

        lhs = grad_inner(grid, a.u, b.u)
        rhs = integrate(grid, ScalarField(grid, apply_laplacian(grid, a.u).values * b.u.values))
        ibp_worst = max(ibp_worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300))

        p = pairing_B(ctx, state, b)
        q = integrate(grid, ScalarField(grid, r.u.values * b.u.values)) + integrate(
            grid, ScalarField(grid, r.v.values * b.v.values)
        )
        pairing_worst = max(pairing_worst, abs(p - q) / max(abs(p), abs(q), 1.0))

        f = _interior_field(grid, np.abs(a.u.values))
        negative = min(negative, float(np.min(solve_poisson(grid, f).values)))

    return [
        GateResult("integration by parts", ibp_worst <= IDENTITY_RTOL, ibp_worst, IDENTITY_RTOL),
        GateResult("pairing consistency", pairing_worst <= IDENTITY_RTOL, pairing_worst, IDENTITY_RTOL),
        GateResult("maximum principle", negative >= 0.0, negative, 0.0),
    ]
