"""Scenario documents: parsing, validation and the built-in library.

A scenario document is a flat list of ``key = value`` lines (``#`` starts a
comment). Pairs are written ``a, b``; booleans as ``true``/``false``. A JSON
object with the same keys is accepted too. Recognised keys:

==================  =====================================================
controller          free | tool_regulator | normal_only | constrained
name, description   free text
m1 m2 l1 l2 J1 J2   robot constants (defaults: 1 kg, 0.4 m, uniform rods)
theta1 theta2       initial angles (rad), default 0
v1 v2               initial angular velocities (rad/s), default 0
project_initial     project the initial state onto the constraint (bool)
x_d                 tool reference ``x, y`` (regulators only)
k1 k                potential and friction gains (regulators only)
eps1 eps2           denominators' regularizers, default 1e-28
constraint          ``ellipse`` (normal_only and constrained only)
ellipse_a/b         semi-axes along x and y (m)
ellipse_center      ``x, y``, default ``0, 0``
gravity             gravitational acceleration (m/s^2), default 0
lambda_scale        multiplier on the normal coefficient, default 1
dt duration stride  integration step (s), horizon (s), sample stride
settle_tol          tool-error tolerance for the settling time (m)
max_tool_error      contract: final tool error bound (m)
max_speed           contract: final metric speed bound
max_psi             contract: bound on max |Psi| over the run
==================  =====================================================
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional


from ..control import EllipseConstraint, Gains
from ..dynamics import JointState, PotentialSpec
from ..errors import GeotoolError, ParseError, ValidationError
from ..geometry import RobotParams

CONTROLLERS = ("free", "tool_regulator", "normal_only", "constrained")
NEEDS_REFERENCE = {"tool_regulator", "constrained"}
NEEDS_CONSTRAINT = {"normal_only", "constrained"}

DEFAULT_DT = 1e-3
DEFAULT_DURATION = 10.0
DEFAULT_STRIDE = 10
DEFAULT_SETTLE_TOL = 1e-3

_FLOAT, _PAIR, _BOOL, _STR, _INT = "float", "pair", "bool", "str", "int"
SCHEMA = {
    "name": _STR, "description": _STR, "controller": _STR,
    "m1": _FLOAT, "m2": _FLOAT, "l1": _FLOAT, "l2": _FLOAT, "J1": _FLOAT, "J2": _FLOAT,
    "theta1": _FLOAT, "theta2": _FLOAT, "v1": _FLOAT, "v2": _FLOAT,
    "project_initial": _BOOL,
    "x_d": _PAIR, "k1": _FLOAT, "k": _FLOAT, "eps1": _FLOAT, "eps2": _FLOAT,
    "constraint": _STR, "ellipse_a": _FLOAT, "ellipse_b": _FLOAT, "ellipse_center": _PAIR,
    "gravity": _FLOAT, "lambda_scale": _FLOAT,
    "dt": _FLOAT, "duration": _FLOAT, "stride": _INT,
    "settle_tol": _FLOAT, "max_tool_error": _FLOAT, "max_speed": _FLOAT, "max_psi": _FLOAT,
}


@dataclass(frozen=True)
class Contract:
    """Convergence thresholds a run is expected to meet; ``None`` skips a check."""

    max_tool_error: Optional[float] = None
    max_speed: Optional[float] = None
    max_psi: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    name: str
    controller: str
    params: RobotParams = field(default_factory=RobotParams)
    initial: JointState = field(default_factory=JointState.of)
    project_initial: bool = False
    x_d: Optional[tuple] = None
    k1: Optional[float] = None
    k: Optional[float] = None
    eps1: float = 1e-28
    eps2: float = 1e-28
    constraint: Optional[EllipseConstraint] = None
    potential: PotentialSpec = PotentialSpec()
    lambda_scale: float = 1.0
    dt: float = DEFAULT_DT
    duration: float = DEFAULT_DURATION
    stride: int = DEFAULT_STRIDE
    settle_tol: float = DEFAULT_SETTLE_TOL
    contract: Contract = Contract()
    description: str = ""

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ValidationError("controller", f"must be one of {', '.join(CONTROLLERS)}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValidationError("dt", "must be positive")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValidationError("duration", "must be non-negative")
        if not (isinstance(self.stride, int) and self.stride >= 1):
            raise ValidationError("stride", "must be an integer >= 1")
        n = round(self.duration / self.dt)
        if abs(n * self.dt - self.duration) > 1e-9 * max(1.0, self.duration):
            raise ValidationError("duration", "must be an integer multiple of dt")
        if not (math.isfinite(self.settle_tol) and self.settle_tol > 0):
            raise ValidationError("settle_tol", "must be positive")
        if not math.isfinite(self.lambda_scale):
            raise ValidationError("lambda_scale", "must be finite")

        regulated = self.controller in NEEDS_REFERENCE
        for name in ("x_d", "k1", "k"):
            present = getattr(self, name) is not None
            if regulated and not present:
                raise ValidationError(name, f"required by controller {self.controller!r}")
            if not regulated and present:
                raise ValidationError(name, f"not used by controller {self.controller!r}")
        if regulated:
            Gains(self.k1, self.k, self.eps1, self.eps2)  # raises on invalid gains
        elif not (self.eps1 >= 0 and self.eps2 >= 0):
            raise ValidationError("eps1", "regularizers must be non-negative")

        constrained = self.controller in NEEDS_CONSTRAINT
        if constrained and self.constraint is None:
            raise ValidationError("constraint", f"required by controller {self.controller!r}")
        if not constrained and self.constraint is not None:
            raise ValidationError("constraint", f"not used by controller {self.controller!r}")
        if self.project_initial and self.constraint is None:
            raise ValidationError("project_initial", "needs a constraint")
        if self.contract.max_psi is not None and self.constraint is None:
            raise ValidationError("max_psi", "needs a constraint")

    @property
    def gains(self) -> Gains:
        return Gains(self.k1, self.k, self.eps1, self.eps2)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.stride + 1


# -- parsing ---------------------------------------------------------------------

def _coerce(key, raw, line=None):
    kind = SCHEMA.get(key)
    if kind is None:
        raise ParseError("unknown key", line=line, field=key)
    try:
        if kind == _STR:
            if not isinstance(raw, str):
                raise TypeError
            return raw.strip()
        if kind == _BOOL:
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text not in ("true", "false"):
                raise ValueError
            return text == "true"
        if kind == _INT:
            if isinstance(raw, bool):
                raise TypeError
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if kind == _FLOAT:
            if isinstance(raw, bool):
                raise TypeError
            return float(raw)
        parts = raw.split(",") if isinstance(raw, str) else list(raw)
        if len(parts) != 2:
            raise ValueError
        return (float(parts[0]), float(parts[1]))
    except (TypeError, ValueError):
        raise ParseError(f"expected a {kind} value, got {raw!r}", line=line, field=key) from None


def parse_document(text: str) -> dict:
    """Parse a key-value or JSON scenario document into typed fields."""
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
        if not isinstance(data, dict):
            raise ParseError("top level must be an object")
        return {key: _coerce(key, value) for key, value in data.items()}

    fields = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("missing key", line=lineno)
        if key in fields:
            raise ParseError("duplicate key", line=lineno, field=key)
        fields[key] = _coerce(key, raw, lineno)
    return fields


def scenario_from_fields(fields: dict) -> Scenario:
    if "controller" not in fields:
        raise ValidationError("controller", "missing")
    params = RobotParams(**{k: fields[k] for k in ("m1", "m2", "l1", "l2", "J1", "J2") if k in fields})
    initial = JointState.of(fields.get("theta1", 0.0), fields.get("theta2", 0.0),
                            fields.get("v1", 0.0), fields.get("v2", 0.0))
    constraint = None
    kind = fields.get("constraint")
    if kind is not None:
        if kind != "ellipse":
            raise ValidationError("constraint", f"unsupported constraint {kind!r}")
        for key in ("ellipse_a", "ellipse_b"):
            if key not in fields:
                raise ValidationError(key, "required for an ellipse constraint")
        constraint = EllipseConstraint(fields["ellipse_a"], fields["ellipse_b"],
                                       fields.get("ellipse_center", (0.0, 0.0)))
    elif any(k in fields for k in ("ellipse_a", "ellipse_b", "ellipse_center")):
        raise ValidationError("constraint", "ellipse keys given without 'constraint = ellipse'")

    contract = Contract(**{k: fields[k] for k in ("max_tool_error", "max_speed", "max_psi") if k in fields})
    optional = {k: fields[k] for k in ("x_d", "k1", "k", "eps1", "eps2", "lambda_scale", "dt",
                                       "duration", "stride", "settle_tol", "description",
                                       "project_initial") if k in fields}
    return Scenario(
        name=fields.get("name", "scenario"), controller=fields["controller"], params=params,
        initial=initial, constraint=constraint,
        potential=PotentialSpec(fields.get("gravity", 0.0)), contract=contract, **optional,
    )


def builtin_names() -> list:
    root = resources.files("geotool") / "scenarios"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def builtin_text(name: str) -> str:
    path = resources.files("geotool") / "scenarios" / f"{name}.cfg"
    if not path.is_file():
        raise KeyError(name)
    return path.read_text()


def load_scenario(text: str) -> Scenario:
    """Build a validated scenario from a document or a built-in scenario name."""
    stripped = text.strip()
    if stripped and not any(ch.isspace() or ch in "={" for ch in stripped):
        try:
            text = builtin_text(stripped)
        except KeyError:
            raise ParseError(f"unknown built-in scenario {stripped!r}") from None
    fields = parse_document(text)
    try:
        return scenario_from_fields(fields)
    except ValidationError:
        raise
    except GeotoolError as exc:
        raise ValidationError("initial", str(exc)) from exc
