from typing import Any, Dict, List, Optional, TypedDict

from typing_extensions import NotRequired

GridDescriptor = TypedDict(
    "GridDescriptor",
    {
        "kind": str,
        "extents": List[List[float]],
        "resolution": List[int],
        "center": NotRequired[List[float]],
        "radius": NotRequired[Optional[float]],
    },
)

CertReportDict = TypedDict(
    "CertReportDict",
    {
        "kind": str,
        "eps": float,
        "passed": bool,
        "worst_margin": float,
        "worst_node": int,
        "worst_equation": str,
    },
)

SolveReportDict = TypedDict(
    "SolveReportDict",
    {
        "converged": bool,
        "iterations": int,
        "method": str,
        "theta": float,
        "eps": float,
        "final_residual": float,
        "residual_history": List[float],
        "pairing_history": List[float],
        "ordering": Optional[List[float]],
        "penalty": Optional[List[float]],
        "message": str,
    },
)

RungReportDict = TypedDict(
    "RungReportDict",
    {
        "n": int,
        "eps": float,
        "retries": int,
        "h1_u": float,
        "h1_v": float,
        "slack_u": float,
        "slack_v": float,
        "sharp_slack_u": float,
        "sharp_slack_v": float,
        "hardy_u": float,
        "hardy_v": float,
        "symmetric_gap": Optional[float],
        "cauchy": Optional[float],
        "convection_l2": List[float],
        "solve": SolveReportDict,
    },
)

ContinuationReportDict = TypedDict(
    "ContinuationReportDict",
    {
        "schedule": List[int],
        "executed": List[int],
        "stopped_early": bool,
        "final_raw_residual": float,
        "cauchy_differences": List[float],
        "rungs": List[RungReportDict],
    },
)

GateDict = TypedDict(
    "GateDict",
    {
        "name": str,
        "passed": bool,
        "value": float,
        "threshold": float,
        "detail": str,
    },
)

RunReportDict = TypedDict(
    "RunReportDict",
    {
        "scenario": str,
        "grid": GridDescriptor,
        "spec": Dict[str, Any],
        "eigen": Dict[str, Any],
        "bounds": Dict[str, Any],
        "certificates": List[List[CertReportDict]],
        "continuation": NotRequired[ContinuationReportDict],
        "gates": List[GateDict],
        "passed": bool,
        "failed_gate": NotRequired[Optional[str]],
    },
)
