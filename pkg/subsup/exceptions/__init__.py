from typing import Any, List, Optional


class SubsupException(Exception):
    pass


class GridError(SubsupException):
    def __init__(self, message: str):

        message = f"Invalid grid: {message}"

        super().__init__(message)


class DomainError(SubsupException):
    pass


class SpecError(SubsupException):
    pass


class LinearSolveError(SubsupException):
    pass


class EigenError(SubsupException):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual

        message = f"Inverse iteration did not converge after {iterations} iterations (last residual {residual:.3e})"

        super().__init__(message)


class BoundsError(SubsupException):
    pass


class ConvergenceError(SubsupException):
    def __init__(self, message: str, report: Optional[Any] = None):
        # partial continuation report, if the failure happened mid-ladder
        self.report = report

        super().__init__(message)


class ScenarioError(SubsupException):
    def __init__(self, violations: List[str]):
        self.violations = violations

        message = "Invalid scenario:\n  " + "\n  ".join(violations)

        super().__init__(message)


class GateFailure(SubsupException):
    def __init__(self, gate: str, detail: str = ""):
        self.gate = gate

        message = f"Invariant gate failed: {gate}"
        if detail:
            message = f"{message} ({detail})"

        super().__init__(message)


__all__ = [
    "SubsupException",
    "GridError",
    "DomainError",
    "SpecError",
    "LinearSolveError",
    "EigenError",
    "BoundsError",
    "ConvergenceError",
    "ScenarioError",
    "GateFailure",
]
