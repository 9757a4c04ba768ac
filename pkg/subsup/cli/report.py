"""
Artifacts of a run: JSON reports, CSV fields and tables, the text summary.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import pandas as pd

from ..bounds import BoundsPair
from ..continuation import ContinuationReport, GateResult
from ..grid import ScalarField
from ..grid.io import FLOAT_FORMAT, fields_frame, write_grid_json
from ..utils import check_mark, cl, pretty_format

CONVERGENCE_COLUMNS = ["n", "eps", "h1_u", "h1_v", "cauchy", "slack_u", "slack_v", "iterations", "residual"]


def write_json(path: Path, data: Any) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    return str(path)


def write_fields(path: Path, fields: Mapping[str, ScalarField]) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    fields_frame(fields).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return str(path)


def convergence_frame(report: ContinuationReport) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for r in report.rungs:
        rows.append(
            {
                "n": r.n,
                "eps": r.eps,
                "h1_u": r.h1_u,
                "h1_v": r.h1_v,
                "cauchy": r.cauchy,
                "slack_u": r.slack_u,
                "slack_v": r.slack_v,
                "iterations": r.solve.iterations,
                "residual": r.solve.final_residual,
                "sharp_slack_u": r.sharp_slack_u,
                "sharp_slack_v": r.sharp_slack_v,
                "hardy_u": r.hardy_u,
                "hardy_v": r.hardy_v,
                "symmetric_gap": r.symmetric_gap,
                "convection_l2_g1": r.convection_l2[0],
                "convection_l2_g2": r.convection_l2[1],
            }
        )
    return pd.DataFrame(rows)


def write_convergence_table(path: Path, report: ContinuationReport) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    convergence_frame(report).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return str(path)


def write_continuation(
    out: Path,
    report: ContinuationReport,
    bounds: Optional[BoundsPair] = None,
    extra: Optional[Mapping[str, ScalarField]] = None,
) -> List[str]:
    """per-rung fields, the JSON report and the convergence table"""
    written = []
    for rung, state in zip(report.rungs, report.states):
        written.append(write_fields(out / "rungs" / f"n{rung.n}.csv", {"u": state.u, "v": state.v}))
    final = report.final_state
    if final is not None:
        fields: Dict[str, ScalarField] = {"u": final.u, "v": final.v}
        if bounds is not None:
            fields.update(
                {
                    "u_lower": bounds.u_lower,
                    "v_lower": bounds.v_lower,
                    "u_upper": bounds.u_upper,
                    "v_upper": bounds.v_upper,
                }
            )
        if extra:
            fields.update(extra)
        written.append(write_fields(out / "fields.csv", fields))
        written.append(write_grid_json(out / "grid.json", final.grid))
    written.append(write_json(out / "continuation.json", report.to_dict()))
    written.append(write_convergence_table(out / "convergence.csv", report))
    return written


def _e(v: Any) -> str:
    return "" if v is None else f"{v:.3e}"


def rung_table(report: ContinuationReport) -> str:
    order = [
        {"key": "n", "header": "n", "align": "right"},
        {"key": "eps", "header": "eps", "fmt": lambda v: f"{v:.4g}", "align": "right"},
        {"key": "iterations", "header": "iter", "align": "right"},
        {"key": "residual", "header": "residual", "fmt": _e, "align": "right"},
        {"key": "h1_u", "header": "|u|H1", "fmt": lambda v: f"{v:.6f}", "align": "right"},
        {"key": "h1_v", "header": "|v|H1", "fmt": lambda v: f"{v:.6f}", "align": "right"},
        {"key": "cauchy", "header": "cauchy", "fmt": _e, "align": "right", "clr": cl.OKCYAN},
        {"key": "slack", "header": "min slack", "fmt": _e, "align": "right"},
    ]
    values = [
        {
            "n": r.n,
            "eps": r.eps,
            "iterations": r.solve.iterations,
            "residual": r.solve.final_residual,
            "h1_u": r.h1_u,
            "h1_v": r.h1_v,
            "cauchy": r.cauchy,
            "slack": min(r.slack_u, r.slack_v),
        }
        for r in report.rungs
    ]
    return pretty_format(values, order)


def gate_lines(gates: Sequence[GateResult]) -> str:
    lines = []
    for g in gates:
        detail = f" [{g.detail}]" if g.detail else ""
        lines.append(f"{check_mark(g.passed)}{g.name}: {g.value:.3e} (threshold {g.threshold:.1e}){detail}")
    return "\n".join(lines)


def summary_text(
    name: str,
    bounds: BoundsPair,
    report: Optional[ContinuationReport],
    gates: Sequence[GateResult],
    failed: Optional[str] = None,
) -> str:
    """plain-text summary; every number is recomputable from the written CSV files"""
    lines = [
        f"scenario: {name}",
        f"subsolution delta: {bounds.delta:.17g}",
        f"supersolution M: {bounds.M:.17g} ({bounds.form.value} form)",
    ]
    if report is not None and report.rungs:
        last = report.rungs[-1]
        ordering = max(max(r.solve.ordering or (0.0, 0.0)) for r in report.rungs)
        lines += [
            f"rungs: {', '.join(str(r.n) for r in report.rungs)}",
            f"final residual: {last.solve.final_residual:.3e}",
            f"final raw-system residual: {report.final_raw_residual:.3e}",
            f"worst ordering margin: {ordering:.3e}",
            f"cauchy tail: {', '.join(f'{d:.3e}' for d in report.cauchy_differences[-3:])}",
        ]
    lines.append("gates:")
    for g in gates:
        lines.append(f"  {'pass' if g.passed else 'FAIL'} {g.name}: {g.value:.3e} (threshold {g.threshold:.1e})")
    lines.append(f"result: {'FAIL (' + failed + ')' if failed else 'PASS'}")
    return "\n".join(lines) + "\n"
