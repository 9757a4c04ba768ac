"""
Problem data of the systems

    -Δu = v^{-α₁} ± v^{β₁} + g₁(∇u, ∇v)
    -Δv = u^{-α₂} ± u^{β₂} + g₂(∇u, ∇v)      u, v > 0 in Ω, u = v = 0 on ∂Ω

and the bounded convection terms g₁, g₂.
"""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

from .exceptions import GridError, SpecError
from .grid import Grid, ScalarField, VectorField, gradient


class Sign(Enum):
    PLUS = "plus"
    MINUS = "minus"

    @property
    def factor(self) -> float:
        return 1.0 if self == Sign.PLUS else -1.0


class ConvectionKind(Enum):
    CONSTANT = "constant"  # g ≡ c
    GAUSSIAN_DECAY = "gaussian-decay"  # c·exp(-|η|² - |ξ|²)
    RATIONAL_DECAY = "rational-decay"  # c/(1 + |η| + |ξ|)


@dataclass(frozen=True)
class ConvectionSpec:
    kind: ConvectionKind = ConvectionKind.CONSTANT
    amplitude: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.kind, str):
            try:
                object.__setattr__(self, "kind", ConvectionKind(self.kind))
            except ValueError:
                raise SpecError(f'unknown convection kind "{self.kind}"')
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise SpecError(f"convection amplitude must be a finite number >= 0, got {self.amplitude}")

    @property
    def sup_norm(self) -> float:
        # every kind in the registry attains its amplitude as supremum
        return float(self.amplitude)

    def __call__(self, eta: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """
        Evaluate g at gradient arguments of shape (..., N)
        """
        eta = np.asarray(eta, dtype=float)
        xi = np.asarray(xi, dtype=float)
        c = self.amplitude
        if self.kind == ConvectionKind.CONSTANT:
            return np.full(np.broadcast_shapes(eta.shape[:-1], xi.shape[:-1]), c)
        if self.kind == ConvectionKind.GAUSSIAN_DECAY:
            return c * np.exp(-np.sum(eta**2, axis=-1) - np.sum(xi**2, axis=-1))
        return c / (1.0 + np.linalg.norm(eta, axis=-1) + np.linalg.norm(xi, axis=-1))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "amplitude": self.amplitude}


def _unit_interval(name: str, value: float) -> None:
    if not (0.0 <= value < 1.0):
        raise SpecError(f"{name} must lie in [0,1), got {value}")


@dataclass(frozen=True)
class ProblemSpec:
    alpha1: float = 0.5
    alpha2: float = 0.5
    beta1: float = 0.5
    beta2: float = 0.5
    sign: Sign = Sign.MINUS
    penalty_exponent: float = 0.5
    g1: ConvectionSpec = field(default_factory=ConvectionSpec)
    g2: ConvectionSpec = field(default_factory=ConvectionSpec)

    def __post_init__(self) -> None:
        if isinstance(self.sign, str):
            try:
                object.__setattr__(self, "sign", Sign(self.sign))
            except ValueError:
                raise SpecError(f'sign must be "plus" or "minus", got "{self.sign}"')

        for name in ["alpha1", "alpha2", "beta1", "beta2"]:
            _unit_interval(name, getattr(self, name))

        if not (0.0 < self.penalty_exponent < 1.0):
            raise SpecError(f"penalty_exponent must lie in (0,1), got {self.penalty_exponent}")

    @property
    def is_symmetric(self) -> bool:
        """both equations coincide under u <-> v"""
        return self.alpha1 == self.alpha2 and self.beta1 == self.beta2 and self.g1 == self.g2

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["sign"] = self.sign.value
        d["g1"] = self.g1.to_dict()
        d["g2"] = self.g2.to_dict()
        return d


@dataclass(frozen=True, eq=False)
class StatePair:
    """a pair (u, v) of nodal fields on one grid"""

    u: ScalarField
    v: ScalarField

    def __post_init__(self) -> None:
        if not self.u.grid.matches(self.v.grid):
            raise GridError("u and v live on different grids")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid) -> "StatePair":
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    def gradients(self) -> Tuple[VectorField, VectorField]:
        return gradient(self.grid, self.u), gradient(self.grid, self.v)

    def scaled(self, c: float) -> "StatePair":
        return StatePair(self.u.scaled(c), self.v.scaled(c))

    def sup_distance(self, other: "StatePair") -> float:
        return float(max(np.max(np.abs(self.u.values - other.u.values)), np.max(np.abs(self.v.values - other.v.values))))
