"""
Sub- and supersolution pairs of the regularised systems.

Both builders search a one-parameter family (δφ₁ for the subsolution, M or
M·e for the supersolution) and accept the first member the nodewise
certifier passes at the ε-worst case: the largest ε of the schedule for the
subsolution, ε = 0 for the supersolution. The singular term is monotone in
ε, so a pair accepted there is accepted for the whole schedule.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import BoundsError
from ..grid import Grid, ScalarField, VectorField, apply_laplacian, linf_norm
from ..problem import ConvectionKind, ConvectionSpec, ProblemSpec, Sign, StatePair
from ..spectral import EigenPair
from ..truncation import NonlinearityContext, g_eps, h_eps
from ..types import CertReportDict
from ..utils import debug
from .torsion import DEFAULT_BALL_FACTOR, enclosing_grid, solve_torsion, torsion_function

CERT_SLACK = 1e-12
MAX_HALVINGS = 60
MAX_DOUBLINGS = 40


class SupersolutionForm(Enum):
    CONSTANT = "constant"
    TORSION = "torsion"


@dataclass(frozen=True, eq=False)
class BoundsPair:
    u_lower: ScalarField
    v_lower: ScalarField
    u_upper: ScalarField
    v_upper: ScalarField
    du_lower: VectorField
    dv_lower: VectorField
    du_upper: VectorField
    dv_upper: VectorField
    delta: float = 0.0
    M: float = 0.0
    form: SupersolutionForm = SupersolutionForm.CONSTANT

    @classmethod
    def from_pairs(
        cls,
        lower: StatePair,
        upper: StatePair,
        delta: float = 0.0,
        M: float = 0.0,
        form: SupersolutionForm = SupersolutionForm.CONSTANT,
    ) -> "BoundsPair":
        du_lower, dv_lower = lower.gradients()
        du_upper, dv_upper = upper.gradients()
        return cls(
            u_lower=lower.u,
            v_lower=lower.v,
            u_upper=upper.u,
            v_upper=upper.v,
            du_lower=du_lower,
            dv_lower=dv_lower,
            du_upper=du_upper,
            dv_upper=dv_upper,
            delta=delta,
            M=M,
            form=form,
        )

    @property
    def grid(self) -> Grid:
        return self.u_lower.grid

    @property
    def lower(self) -> StatePair:
        return StatePair(self.u_lower, self.v_lower)

    @property
    def upper(self) -> StatePair:
        return StatePair(self.u_upper, self.v_upper)

    def violations(self) -> List[str]:
        """broken BoundsPair invariants, empty when the pair is valid"""
        g = self.grid
        idx = g.interior_nodes
        out = []
        if not (np.all(self.u_lower.values[idx] > 0) and np.all(self.v_lower.values[idx] > 0)):
            out.append("subsolution is not positive at every interior node")
        if np.any(self.u_lower.values > self.u_upper.values) or np.any(self.v_lower.values > self.v_upper.values):
            out.append("subsolution exceeds supersolution")
        if not (self.u_lower.is_dirichlet() and self.v_lower.is_dirichlet()):
            out.append("subsolution does not vanish on the boundary")
        bnd = g.boundary_mask
        if np.any(self.u_upper.values[bnd] < 0) or np.any(self.v_upper.values[bnd] < 0):
            out.append("supersolution is negative on the boundary")
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta,
            "M": self.M,
            "form": self.form.value,
            "u_lower_max": linf_norm(self.u_lower),
            "v_lower_max": linf_norm(self.v_lower),
            "u_upper_min": float(np.min(self.u_upper.interior)),
            "v_upper_min": float(np.min(self.v_upper.interior)),
            "u_upper_max": linf_norm(self.u_upper),
            "v_upper_max": linf_norm(self.v_upper),
        }


@dataclass
class CertReport:
    kind: str  # "sub" or "super"
    eps: float
    passed: bool
    worst_margin: float
    worst_node: int
    worst_equation: str
    margins_u: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    margins_v: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    def to_dict(self) -> CertReportDict:
        return {
            "kind": self.kind,
            "eps": self.eps,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "worst_node": self.worst_node,
            "worst_equation": self.worst_equation,
        }


def _sup_convection(spec: ProblemSpec) -> ProblemSpec:
    # g_i replaced by the constant ‖g_i‖∞: certifies for any gradient argument
    return replace(
        spec,
        g1=ConvectionSpec(ConvectionKind.CONSTANT, spec.g1.sup_norm),
        g2=ConvectionSpec(ConvectionKind.CONSTANT, spec.g2.sup_norm),
    )


def _certify(kind: str, grid: Grid, spec: ProblemSpec, pair: StatePair, eps: float) -> CertReport:
    idx = grid.interior_nodes
    if idx.size == 0:
        return CertReport(kind, eps, True, float("inf"), -1, "")

    ctx = NonlinearityContext(spec, None, eps)
    u, v = pair.u, pair.v
    du, dv = pair.gradients()
    args = (idx, u.values[idx], v.values[idx], du.values[idx], dv.values[idx])

    lap_u = apply_laplacian(grid, u).values[idx]
    lap_v = apply_laplacian(grid, v).values[idx]
    h = h_eps(ctx, *args)
    g = g_eps(ctx, *args)

    if kind == "sub":
        # -Δu̲ ≤ H_ε(u̲, v̲, ∇u̲, ∇v̲)
        margins_u = h - lap_u
        margins_v = g - lap_v
    else:
        margins_u = lap_u - h
        margins_v = lap_v - g

    iu = int(np.argmin(margins_u))
    iv = int(np.argmin(margins_v))
    if margins_u[iu] <= margins_v[iv]:
        worst, node, eq = float(margins_u[iu]), int(idx[iu]), "u"
    else:
        worst, node, eq = float(margins_v[iv]), int(idx[iv]), "v"

    return CertReport(
        kind=kind,
        eps=eps,
        passed=worst >= -CERT_SLACK,
        worst_margin=worst,
        worst_node=node,
        worst_equation=eq,
        margins_u=margins_u,
        margins_v=margins_v,
    )


def verify_subsolution(grid: Grid, spec: ProblemSpec, pair: StatePair, eps: float) -> CertReport:
    """
    Nodewise -Δ_h u̲ ≤ H_ε(x, u̲, v̲, ∇u̲, ∇v̲) and -Δ_h v̲ ≤ G_ε(...) at every
    interior node, up to CERT_SLACK. Testing against the nonnegative hat
    functions makes this the discrete weak inequality.
    """
    return _certify("sub", grid, spec, pair, eps)


def verify_supersolution(
    grid: Grid, spec: ProblemSpec, pair: StatePair, eps: float, uniform_convection: bool = False
) -> CertReport:
    """
    Nodewise -Δ_h ū ≥ H_ε(x, ū, v̄, ∇ū, ∇v̄) and the G analog. With
    uniform_convection the convection terms are bounded by their sup norm,
    certifying the pair for every gradient argument.
    """
    if uniform_convection:
        spec = _sup_convection(spec)
    return _certify("super", grid, spec, pair, eps)


def build_subsolution(
    grid: Grid, spec: ProblemSpec, eigenpair: EigenPair, eps_max: float, max_halvings: int = MAX_HALVINGS
) -> Tuple[float, StatePair]:
    """
    Halve δ from 1 until (δφ₁, δφ₁) is certified at eps_max.
    """
    if eps_max <= 0:
        raise BoundsError(f"eps_max must be positive, got {eps_max}")
    if not eigenpair.phi1.grid.matches(grid):
        raise BoundsError("eigenpair lives on a different grid")

    delta = 1.0
    for step in range(max_halvings + 1):
        seed = eigenpair.phi1.scaled(delta)
        pair = StatePair(seed, seed)
        report = verify_subsolution(grid, spec, pair, eps_max)
        debug(f"subsolution: delta={delta:.6g} worst margin={report.worst_margin:.3e}")
        if report.passed:
            return delta, pair
        delta /= 2.0

    raise BoundsError(f"no subsolution scale found after {max_halvings} halvings")


def _ordered(lower: StatePair, upper: StatePair) -> bool:
    return bool(np.all(upper.u.values >= lower.u.values) and np.all(upper.v.values >= lower.v.values))


def _torsion_search(
    grid: Grid,
    spec: ProblemSpec,
    subsolution: StatePair,
    torsion_e: ScalarField,
    eps_min: float,
    max_doublings: int,
) -> Tuple[float, StatePair]:
    M = 1.0
    for step in range(max_doublings + 1):
        upper = StatePair(torsion_e.scaled(M), torsion_e.scaled(M))
        report = verify_supersolution(grid, spec, upper, eps_min, uniform_convection=True)
        ordered = _ordered(subsolution, upper)
        debug(f"supersolution (torsion): M={M:.6g} worst margin={report.worst_margin:.3e} ordered={ordered}")
        if report.passed and ordered:
            return M, upper
        M *= 2.0

    raise BoundsError(f"no torsion-form supersolution found after {max_doublings} doublings")


def build_supersolution(
    grid: Grid,
    spec: ProblemSpec,
    subsolution: StatePair,
    torsion_e: Optional[ScalarField] = None,
    eps_min: float = 0.0,
    max_doublings: int = MAX_DOUBLINGS,
) -> Tuple[float, StatePair, SupersolutionForm]:
    """
    Constant pair (M, M) for sign minus, doubling M from max(1, 2‖u̲‖∞) and
    falling back to the torsion form when the budget runs out; torsion form
    (M·e, M·e) for sign plus. Returns M, the pair and the form used.
    """
    if spec.sign == Sign.MINUS:
        M = max(1.0, 2.0 * max(linf_norm(subsolution.u), linf_norm(subsolution.v)))
        for step in range(max_doublings + 1):
            upper = StatePair(ScalarField.constant(grid, M), ScalarField.constant(grid, M))
            report = verify_supersolution(grid, spec, upper, eps_min)
            debug(f"supersolution (constant): M={M:.6g} worst margin={report.worst_margin:.3e}")
            if report.passed and _ordered(subsolution, upper):
                return M, upper, SupersolutionForm.CONSTANT
            M *= 2.0
        debug("supersolution: constant form exhausted, falling back to the torsion form")

    if torsion_e is None:
        raise BoundsError("a torsion function is needed for the torsion-form supersolution")
    M, upper = _torsion_search(grid, spec, subsolution, torsion_e, eps_min, max_doublings)
    return M, upper, SupersolutionForm.TORSION


def build_bounds(
    grid: Grid,
    spec: ProblemSpec,
    eigenpair: EigenPair,
    eps_max: float,
    ball_factor: float = DEFAULT_BALL_FACTOR,
) -> BoundsPair:
    """
    Subsolution, then supersolution (computing the enclosing-ball torsion
    function only if the torsion form is needed), assembled and checked.
    """
    delta, lower = build_subsolution(grid, spec, eigenpair, eps_max)

    torsion_e: Optional[ScalarField] = None
    if spec.sign == Sign.PLUS:
        torsion_e = torsion_function(enclosing_grid(grid, ball_factor), grid)
    try:
        M, upper, form = build_supersolution(grid, spec, lower, torsion_e)
    except BoundsError:
        if torsion_e is not None:
            raise
        torsion_e = torsion_function(enclosing_grid(grid, ball_factor), grid)
        M, upper, form = build_supersolution(grid, spec, lower, torsion_e)

    bounds = BoundsPair.from_pairs(lower, upper, delta=delta, M=M, form=form)
    broken = bounds.violations()
    if broken:
        raise BoundsError("; ".join(broken))
    return bounds


def certify_schedule(
    grid: Grid, spec: ProblemSpec, bounds: BoundsPair, eps_values: Sequence[float]
) -> List[Tuple[CertReport, CertReport]]:
    """
    Re-certify the pair at every scheduled ε explicitly: (sub, super) reports
    per ε.
    """
    uniform = bounds.form == SupersolutionForm.TORSION
    return [
        (
            verify_subsolution(grid, spec, bounds.lower, eps),
            verify_supersolution(grid, spec, bounds.upper, eps, uniform_convection=uniform),
        )
        for eps in eps_values
    ]


__all__ = [
    "BoundsPair",
    "CertReport",
    "SupersolutionForm",
    "build_bounds",
    "build_subsolution",
    "build_supersolution",
    "certify_schedule",
    "enclosing_grid",
    "solve_torsion",
    "torsion_function",
    "verify_subsolution",
    "verify_supersolution",
]
