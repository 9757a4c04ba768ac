"""
Scenario files.

A scenario is an INI-style key/value document. Keys can be written flat
and dotted before any section header, or grouped under a section:

    domain.kind = rectangle          [domain]
    domain.extents = 0,1;0,1         kind = rectangle
    domain.resolution = 33           extents = 0,1;0,1
                                     resolution = 33

Both spell the same keys. Unknown keys are errors, and every violation in
a file is reported at once with its line number.
"""

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..bounds.torsion import DEFAULT_BALL_FACTOR, MIN_CLEARANCE
from ..continuation import DEFAULT_SCHEDULE, ContinuationSchedule
from ..exceptions import GridError, ScenarioError, SpecError
from ..grid import Grid, build_grid
from ..problem import ConvectionSpec, ProblemSpec
from ..solver import SolverConfig

ROOT_SECTION = "__root__"
SECTIONS = ["domain", "spec", "bounds", "schedule", "solver", "output"]

DEFAULT_CONVECTION = ("gaussian-decay", 0.5)


@dataclass
class ScenarioConfig:
    name: str
    grid: Grid
    spec: ProblemSpec = field(default_factory=ProblemSpec)
    schedule: ContinuationSchedule = field(default_factory=ContinuationSchedule)
    solver: SolverConfig = field(default_factory=SolverConfig)
    ball_factor: float = DEFAULT_BALL_FACTOR
    output_dir: Optional[str] = None
    seed: int = 0
    source: Optional[str] = None


def _floats(text: str) -> List[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _ints(text: str) -> List[int]:
    values = [int(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ValueError("expected at least one integer")
    return values


def _extents(text: str) -> List[List[float]]:
    # "0,1" or "0,1;0,2", one lo,hi pair per axis
    axes = [_floats(a) for a in text.split(";") if a.strip()]
    for a in axes:
        if len(a) != 2:
            raise ValueError(f'expected "lo,hi" per axis, got {a}')
    return axes


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = text.strip().lower()
        if value not in options:
            raise ValueError(f'expected one of {", ".join(options)}, got "{text}"')
        return value

    return parse


def _spec_field(name: str) -> Callable[[Any], Any]:
    # validate one ProblemSpec field on its own so every bad field is reported
    def check(value: Any) -> Any:
        ProblemSpec(**{name: value})
        return value

    return check


def _solver_field(name: str) -> Callable[[Any], Any]:
    def check(value: Any) -> Any:
        SolverConfig(**{name: value})
        return value

    return check


def _amplitude(value: float) -> float:
    ConvectionSpec(amplitude=value)
    return value


def _ball_factor(value: float) -> float:
    if value < 1.0 + MIN_CLEARANCE:
        raise SpecError(f"ball_factor must be >= {1.0 + MIN_CLEARANCE}, got {value}")
    return value


# key -> (parser, validator)
KEYS: Dict[str, Tuple[Callable[[str], Any], Optional[Callable[[Any], Any]]]] = {
    "domain.kind": (_choice("interval", "rectangle", "disc"), None),
    "domain.extents": (_extents, None),
    "domain.resolution": (_ints, None),
    "domain.radius": (float, None),
    "domain.center": (_floats, None),
    "spec.alpha1": (float, _spec_field("alpha1")),
    "spec.alpha2": (float, _spec_field("alpha2")),
    "spec.beta1": (float, _spec_field("beta1")),
    "spec.beta2": (float, _spec_field("beta2")),
    "spec.sign": (_choice("plus", "minus"), None),
    "spec.penalty_exponent": (float, _spec_field("penalty_exponent")),
    "spec.g1.kind": (_choice("constant", "gaussian-decay", "rational-decay"), None),
    "spec.g1.amplitude": (float, _amplitude),
    "spec.g2.kind": (_choice("constant", "gaussian-decay", "rational-decay"), None),
    "spec.g2.amplitude": (float, _amplitude),
    "bounds.ball_factor": (float, _ball_factor),
    "schedule.n": (_ints, lambda n: ContinuationSchedule(tuple(n))),
    "solver.theta": (float, _solver_field("theta")),
    "solver.tol": (float, _solver_field("tol")),
    "solver.max_iter": (int, _solver_field("max_iter")),
    "solver.method": (_choice("picard", "dense-newton"), None),
    "output.dir": (str, None),
    "seed": (int, None),
}

REQUIRED = ["domain.kind", "domain.extents", "domain.resolution"]

_section_re = re.compile(r"^\s*\[([^\]]+)\]")
_key_re = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _flat_key(section: str, key: str) -> str:
    return key if section == ROOT_SECTION else f"{section}.{key}"


def _line_numbers(text: str) -> Dict[str, int]:
    """flattened key -> 1-based line of its first occurrence"""
    lines: Dict[str, int] = {}
    section = ROOT_SECTION
    for i, line in enumerate(text.splitlines(), start=1):
        m = _section_re.match(line)
        if m:
            section = m.group(1).strip()
            continue
        m = _key_re.match(line)
        if m:
            lines.setdefault(_flat_key(section, m.group(1).strip()), i)
    return lines


def _read(text: str) -> Tuple[Dict[str, str], List[str]]:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        # flat keys before the first header land in a synthetic root section
        parser.read_string(f"[{ROOT_SECTION}]\n{text}")
    except configparser.ParsingError as e:
        return {}, [f"line {lineno - 1}: could not parse {line.strip()}" for lineno, line in e.errors]
    except configparser.Error as e:
        message = str(e).replace("\n", " ")
        lineno = getattr(e, "lineno", None)
        if lineno is not None:
            return {}, [f"line {lineno - 1}: {message}"]
        return {}, [message]

    raw: Dict[str, str] = {}
    violations: List[str] = []
    for section in parser.sections():
        if section != ROOT_SECTION and section not in SECTIONS:
            violations.append(f'unknown section "[{section}]"')
            continue
        for key, value in parser.items(section):
            raw[_flat_key(section, key)] = value
    return raw, violations


def parse_scenario(text: str, name: str = "scenario", source: Optional[str] = None) -> ScenarioConfig:
    """
    Parse and validate a scenario document. Raises ScenarioError with all
    violations found.
    """
    raw, violations = _read(text)
    lines = _line_numbers(text)

    def where(key: str) -> str:
        return f"line {lines[key]}: " if key in lines else ""

    values: Dict[str, Any] = {}
    for key, value in raw.items():
        if key not in KEYS:
            violations.append(f'{where(key)}unknown key "{key}"')
            continue
        parse, validate = KEYS[key]
        try:
            parsed = parse(value)
            if validate is not None:
                validate(parsed)
        except (ValueError, SpecError, GridError) as e:
            violations.append(f"{where(key)}{key}: {e}")
            continue
        values[key] = parsed

    for key in REQUIRED:
        if key not in raw:
            violations.append(f'missing required key "{key}"')

    grid: Optional[Grid] = None
    if all(k in values for k in REQUIRED):
        resolution = values["domain.resolution"]
        try:
            grid = build_grid(
                values["domain.kind"],
                values["domain.extents"],
                resolution[0] if len(resolution) == 1 else resolution,
                radius=values.get("domain.radius"),
                center=values.get("domain.center"),
            )
        except GridError as e:
            violations.append(f"{where('domain.kind')}domain: {e}")

    if violations:
        raise ScenarioError(violations)
    assert grid is not None

    def convection(i: int) -> ConvectionSpec:
        kind = values.get(f"spec.g{i}.kind", DEFAULT_CONVECTION[0])
        amplitude = values.get(f"spec.g{i}.amplitude", DEFAULT_CONVECTION[1])
        return ConvectionSpec(kind, amplitude)

    spec = ProblemSpec(
        alpha1=values.get("spec.alpha1", 0.5),
        alpha2=values.get("spec.alpha2", 0.5),
        beta1=values.get("spec.beta1", 0.5),
        beta2=values.get("spec.beta2", 0.5),
        sign=values.get("spec.sign", "minus"),
        penalty_exponent=values.get("spec.penalty_exponent", 0.5),
        g1=convection(1),
        g2=convection(2),
    )
    solver = SolverConfig(
        theta=values.get("solver.theta", 0.5),
        tol=values.get("solver.tol", 1e-10),
        max_iter=values.get("solver.max_iter", 2000),
        method=values.get("solver.method", "picard"),
    )

    return ScenarioConfig(
        name=name,
        grid=grid,
        spec=spec,
        schedule=ContinuationSchedule(tuple(values.get("schedule.n", DEFAULT_SCHEDULE))),
        solver=solver,
        ball_factor=values.get("bounds.ball_factor", DEFAULT_BALL_FACTOR),
        output_dir=values.get("output.dir"),
        seed=values.get("seed", 0),
        source=source,
    )


def load_scenario(path: str) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ScenarioError([f"could not read {path}: {e.strerror}"])
    return parse_scenario(text, name=p.stem, source=str(p))
