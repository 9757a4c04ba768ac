"""
Pointwise nonlinearities of the regularised and truncated systems.

    H_ε(s, t, η, ξ) = (t² + ε)^{-α₁/2} ± t^{β₁} + g₁(η, ξ)
    G_ε(s, t, η, ξ) = (s² + ε)^{-α₂/2} ± s^{β₂} + g₂(η, ξ)

H₁/G₁ freeze their arguments at the sub/supersolution values (and
gradients) outside the band [u̲, ū] × [v̲, v̄]; γ₁/γ₂ penalise leaving the
band; H₂ = H₁ - γ₁, G₂ = G₁ - γ₂ are what the auxiliary system solves.

Every evaluator is vectorised: `node` may be an index or an index array,
s/t broadcast against it and η/ξ carry the gradient components on their
last axis.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import DomainError
from .grid import Grid, ScalarField, VectorField
from .problem import ProblemSpec

if TYPE_CHECKING:
    from .bounds import BoundsPair

Node = Union[int, np.ndarray]
ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class NonlinearityContext:
    spec: ProblemSpec
    # None is enough for the raw H_ε / G_ε; the truncations need the band
    bounds: Optional["BoundsPair"]
    eps: float

    def __post_init__(self) -> None:
        if not self.eps >= 0:
            raise DomainError(f"eps must be >= 0, got {self.eps}")


def _singular(arg: np.ndarray, alpha: float, eps: float) -> np.ndarray:
    base = arg * arg + eps
    if alpha > 0 and np.any(base == 0):
        raise DomainError("singular term evaluated at 0 with eps = 0")
    with np.errstate(divide="ignore"):
        return np.asarray(base ** (-alpha / 2.0))


def h_eps(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike, eta: Any, xi: Any) -> np.ndarray:
    """
    H_ε at the given arguments. H carries no explicit x dependence, node is
    accepted so all evaluators share one signature.
    """
    spec = ctx.spec
    t = np.asarray(t, dtype=float)
    # truncated branches only ever pass t >= v̲ > 0; direct calls get |t|
    return _singular(t, spec.alpha1, ctx.eps) + spec.sign.factor * np.abs(t) ** spec.beta1 + spec.g1(eta, xi)


def g_eps(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike, eta: Any, xi: Any) -> np.ndarray:
    spec = ctx.spec
    s = np.asarray(s, dtype=float)
    return _singular(s, spec.alpha2, ctx.eps) + spec.sign.factor * np.abs(s) ** spec.beta2 + spec.g2(eta, xi)


def gamma(l: float, lower_val: ArrayLike, upper_val: ArrayLike, s: ArrayLike) -> np.ndarray:
    """γ(s) = -((lower - s)₊)^l + ((s - upper)₊)^l"""
    s = np.asarray(s, dtype=float)
    below = np.maximum(np.asarray(lower_val) - s, 0.0)
    above = np.maximum(s - np.asarray(upper_val), 0.0)
    return np.asarray(-(below**l) + above**l)


def _frozen(ctx: NonlinearityContext, node: Node) -> Tuple[np.ndarray, ...]:
    b = ctx.bounds
    if b is None:
        raise DomainError("truncated nonlinearities need sub/supersolution bounds")
    return (
        b.u_lower.values[node],
        b.u_upper.values[node],
        b.v_lower.values[node],
        b.v_upper.values[node],
        b.du_lower.values[node],
        b.du_upper.values[node],
        b.dv_lower.values[node],
        b.dv_upper.values[node],
    )


def _vec(mask: np.ndarray) -> np.ndarray:
    # lift a branch mask onto the gradient component axis
    return np.asarray(mask)[..., None]


def h1_branch(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike) -> np.ndarray:
    """branch id 1..5 of H₁: s decides first, then t"""
    ul, uu, vl, vu = _frozen(ctx, node)[:4]
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.select([s < ul, s > uu, t < vl, t > vu], [1, 5, 2, 4], default=3)


def g1_branch(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike) -> np.ndarray:
    """branch id 1..5 of G₁: t decides first, then s"""
    ul, uu, vl, vu = _frozen(ctx, node)[:4]
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.select([t < vl, t > vu, s < ul, s > uu], [1, 5, 2, 4], default=3)


def h1_eval(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike, eta: Any, xi: Any) -> np.ndarray:
    ul, uu, vl, vu, dul, duu, dvl, dvu = _frozen(ctx, node)
    b = h1_branch(ctx, node, s, t)

    s_arg = np.select([b == 1, b == 5], [ul, uu], default=s)
    t_arg = np.select([b <= 2, b >= 4], [vl, vu], default=t)
    eta_arg = np.where(_vec(b == 1), dul, np.where(_vec(b == 5), duu, eta))
    # branch 5 freezes (∇ū, ∇v̄), mirroring branch 1 and G₁
    xi_arg = np.where(_vec(b <= 2), dvl, np.where(_vec(b >= 4), dvu, xi))

    return h_eps(ctx, node, s_arg, t_arg, eta_arg, xi_arg)


def g1_eval(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike, eta: Any, xi: Any) -> np.ndarray:
    ul, uu, vl, vu, dul, duu, dvl, dvu = _frozen(ctx, node)
    b = g1_branch(ctx, node, s, t)

    s_arg = np.select([b <= 2, b >= 4], [ul, uu], default=s)
    t_arg = np.select([b == 1, b == 5], [vl, vu], default=t)
    eta_arg = np.where(_vec(b <= 2), dul, np.where(_vec(b >= 4), duu, eta))
    xi_arg = np.where(_vec(b == 1), dvl, np.where(_vec(b == 5), dvu, xi))

    return g_eps(ctx, node, s_arg, t_arg, eta_arg, xi_arg)


def h2_eval(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike, eta: Any, xi: Any) -> np.ndarray:
    ul, uu = _frozen(ctx, node)[:2]
    return h1_eval(ctx, node, s, t, eta, xi) - gamma(ctx.spec.penalty_exponent, ul, uu, s)


def g2_eval(ctx: NonlinearityContext, node: Node, s: ArrayLike, t: ArrayLike, eta: Any, xi: Any) -> np.ndarray:
    vl, vu = _frozen(ctx, node)[2:4]
    return g1_eval(ctx, node, s, t, eta, xi) - gamma(ctx.spec.penalty_exponent, vl, vu, t)


def boundedness_constants(ctx: NonlinearityContext) -> Tuple[float, float]:
    """
    Uniform bounds of |H₁| and |G₁| over all arguments at interior nodes:
    the truncation keeps the singular argument in [v̲, v̄] (resp. [u̲, ū]).
    """
    b = ctx.bounds
    assert b is not None
    idx = b.grid.interior_nodes
    spec = ctx.spec
    h = (
        (np.min(b.v_lower.values[idx]) ** 2 + ctx.eps) ** (-spec.alpha1 / 2.0)
        + np.max(b.v_upper.values[idx]) ** spec.beta1
        + spec.g1.sup_norm
    )
    g = (
        (np.min(b.u_lower.values[idx]) ** 2 + ctx.eps) ** (-spec.alpha2 / 2.0)
        + np.max(b.u_upper.values[idx]) ** spec.beta2
        + spec.g2.sup_norm
    )
    return float(h), float(g)


class SystemRhs(ABC):
    """
    Right-hand sides of a 2x2 system -Δu = F(u, v, ∇u, ∇v), -Δv = G(...),
    evaluated at the interior nodes of the grid.
    """

    eps: float = 0.0
    bounds: Optional["BoundsPair"] = None

    @abstractmethod
    def rhs(self, u: ScalarField, v: ScalarField, du: VectorField, dv: VectorField) -> Tuple[np.ndarray, np.ndarray]:
        ...


class TruncatedSystem(SystemRhs):
    """the auxiliary system with H₂, G₂ (raw=False) or the plain regularised one"""

    def __init__(self, ctx: NonlinearityContext, raw: bool = False) -> None:
        self.ctx = ctx
        self.raw = raw
        self.eps = ctx.eps
        self.bounds = ctx.bounds

    @property
    def spec(self) -> ProblemSpec:
        return self.ctx.spec

    def rhs(self, u: ScalarField, v: ScalarField, du: VectorField, dv: VectorField) -> Tuple[np.ndarray, np.ndarray]:
        idx = u.grid.interior_nodes
        args = (idx, u.values[idx], v.values[idx], du.values[idx], dv.values[idx])
        if self.raw:
            return h_eps(self.ctx, *args), g_eps(self.ctx, *args)
        return h2_eval(self.ctx, *args), g2_eval(self.ctx, *args)


class ConstantRhs(SystemRhs):
    """
    State-independent right-hand sides, for debugging the solvers:
    ConstantRhs(grid) is the zero nonlinearity, ConstantRhs(grid, 1, 1)
    turns every solve into a torsion problem.
    """

    def __init__(self, grid: Grid, h_value: float = 0.0, g_value: float = 0.0) -> None:
        self.grid = grid
        self.h_value = h_value
        self.g_value = g_value

    def rhs(self, u: ScalarField, v: ScalarField, du: VectorField, dv: VectorField) -> Tuple[np.ndarray, np.ndarray]:
        n = self.grid.n_interior
        return np.full(n, self.h_value), np.full(n, self.g_value)


def penalty_maxima(ctx: NonlinearityContext, u: ScalarField, v: ScalarField) -> Tuple[float, float]:
    """max |γ₁(x, u)| and max |γ₂(x, v)| over all nodes"""
    b = ctx.bounds
    assert b is not None
    l = ctx.spec.penalty_exponent
    p1 = gamma(l, b.u_lower.values, b.u_upper.values, u.values)
    p2 = gamma(l, b.v_lower.values, b.v_upper.values, v.values)
    return float(np.max(np.abs(p1))), float(np.max(np.abs(p2)))


def truncation_table(
    ctx: NonlinearityContext,
    node: int,
    s_values: Sequence[float],
    t_values: Sequence[float],
    eta: Optional[np.ndarray] = None,
    xi: Optional[np.ndarray] = None,
) -> pd.DataFrame:
    """
    Branch ids and values of H₁, H₂, G₁, G₂ over an (s, t) lattice at one
    node. Gradient arguments default to zero vectors.
    """
    assert ctx.bounds is not None
    dim = ctx.bounds.grid.dim
    S, T = np.meshgrid(np.asarray(s_values, dtype=float), np.asarray(t_values, dtype=float), indexing="ij")
    s = S.ravel()
    t = T.ravel()
    e = np.broadcast_to(np.zeros(dim) if eta is None else np.asarray(eta, dtype=float), (s.size, dim))
    x = np.broadcast_to(np.zeros(dim) if xi is None else np.asarray(xi, dtype=float), (s.size, dim))
    nodes = np.full(s.size, node)

    return pd.DataFrame(
        {
            "s": s,
            "t": t,
            "h_branch": h1_branch(ctx, nodes, s, t),
            "h1": h1_eval(ctx, nodes, s, t, e, x),
            "h2": h2_eval(ctx, nodes, s, t, e, x),
            "g_branch": g1_branch(ctx, nodes, s, t),
            "g1": g1_eval(ctx, nodes, s, t, e, x),
            "g2": g2_eval(ctx, nodes, s, t, e, x),
        }
    )
