"""Geometric feedback laws for the two-link arm.

Three laws are provided:

* the tool regulator ``u = grad U - k v - grad V`` with the potential
  ``V(q) = k1/2 |x(q) - x_d|^2`` (drives the tool to ``x_d``);
* the normal constraint force ``lambda grad Psi``, with ``Psi = Phi o x``,
  which keeps a configuration started on ``N = Psi^-1(0)`` with tangent
  velocity on ``N``;
* the constrained regulator ``lambda grad Psi - (grad V)_par - k v_par``.

All gradients are metric gradients. The normal coefficient is regularized as
``lambda = -g(D grad Psi/Dt, v) / (|grad Psi|^2 + eps1)`` and the unit normal
as ``grad Psi / (|grad Psi| + eps2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np
from scipy.optimize import brentq

from .dynamics import NO_POTENTIAL, JointState, PotentialSpec
from .errors import NoConvergence, SingularGradient, ValidationError
from .geometry import FIELD_STEP, RobotParams, _covariant_derivative_entries, _metric_entries, as_point
from .kinematics import _tool

#: Regularizer used by the reference constrained simulation.
DEFAULT_EPS = 1e-28
#: Below this metric norm the constraint gradient counts as vanished.
GRADIENT_FLOOR = 1e-10


@dataclass(frozen=True)
class Gains:
    k1: float
    k: float
    eps1: float = DEFAULT_EPS
    eps2: float = DEFAULT_EPS

    def __post_init__(self):
        for name in ("k1", "k"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(name, f"must be positive, got {value!r}")
        for name in ("eps1", "eps2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(name, f"must be non-negative, got {value!r}")


class Constraint(Protocol):
    """A scalar function ``Phi`` on the workspace plane; ``S = Phi^-1(0)``."""

    description: str

    def phi(self, x: float, y: float) -> float: ...

    def grad_phi(self, x: float, y: float) -> tuple: ...


@dataclass(frozen=True)
class EllipseConstraint:
    """``Phi(x, y) = ((x - cx)/a)^2 + ((y - cy)/b)^2 - 1``."""

    a: float
    b: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        for name in ("a", "b"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"ellipse_{name}", f"must be positive, got {value!r}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def description(self) -> str:
        cx, cy = self.center
        return f"ellipse a={self.a:g} b={self.b:g} center=({cx:g}, {cy:g})"

    def phi(self, x: float, y: float) -> float:
        dx, dy = (x - self.center[0]) / self.a, (y - self.center[1]) / self.b
        return dx * dx + dy * dy - 1.0

    def grad_phi(self, x: float, y: float):
        return (2.0 * (x - self.center[0]) / (self.a * self.a),
                2.0 * (y - self.center[1]) / (self.b * self.b))

    def point(self, s: float) -> np.ndarray:
        """Point of ``S`` at parameter angle ``s``."""
        return np.array([self.center[0] + self.a * math.cos(s), self.center[1] + self.b * math.sin(s)])

    def tangent(self, s: float) -> np.ndarray:
        return np.array([-self.a * math.sin(s), self.b * math.cos(s)])


@dataclass(frozen=True)
class ControlOutput:
    """Control vector with its decomposition.

    When a constraint is active ``u == normal + tangential`` and
    ``normal == lam * grad Psi``; otherwise ``lam`` and ``psi`` are NaN and
    the whole control is tangential.
    """

    u: np.ndarray
    lam: float = math.nan
    normal: np.ndarray = field(default_factory=lambda: np.zeros(2))
    tangential: np.ndarray = field(default_factory=lambda: np.zeros(2))
    psi: float = math.nan


# -- scalar kernels -------------------------------------------------------------

def _sharp(params, t1, t2, p1, p2):
    g11, g12, g22 = _metric_entries(params, t1, t2)
    det = g11 * g22 - g12 * g12
    return (g22 * p1 - g12 * p2) / det, (g11 * p2 - g12 * p1) / det


def _pullback(params, t1, t2, w1, w2):
    """``Dx(q)^T w`` for a workspace covector ``w``."""
    l1, l2 = params.l1, params.l2
    return (-l1 * math.sin(t1) * w1 + l1 * math.cos(t1) * w2,
            -l2 * math.sin(t2) * w1 + l2 * math.cos(t2) * w2)


def _grad_lasalle(params, t1, t2, xd, k1):
    x, y = _tool(params, t1, t2)
    p1, p2 = _pullback(params, t1, t2, k1 * (x - xd[0]), k1 * (y - xd[1]))
    return _sharp(params, t1, t2, p1, p2)


def _grad_psi(params, c, t1, t2):
    # hot path of the normal force: one set of trig calls shared by the
    # tool map, the pullback and the inverse metric
    l1, l2 = params.l1, params.l2
    c1, s1, c2, s2 = math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2)
    x, y = l1 * c1 + l2 * c2, l1 * s1 + l2 * s2
    f1, f2 = c.grad_phi(x, y)
    if f1 == 0.0 and f2 == 0.0:
        raise SingularGradient(f"constraint function not submersive at tool point ({x}, {y})")
    p1, p2 = l1 * (c1 * f2 - s1 * f1), l2 * (c2 * f2 - s2 * f1)
    g11, g22 = params.inertia1, params.inertia2
    g12 = params.coupling * (c1 * c2 + s1 * s2)
    det = g11 * g22 - g12 * g12
    return (g22 * p1 - g12 * p2) / det, (g11 * p2 - g12 * p1) / det


def _inner(params, t1, t2, a1, a2, b1, b2):
    g11, g12, g22 = _metric_entries(params, t1, t2)
    return g11 * a1 * b1 + g12 * (a1 * b2 + a2 * b1) + g22 * a2 * b2


# -- unconstrained regulator ----------------------------------------------------

def lasalle_potential(params: RobotParams, q, x_d, k1: float) -> float:
    """``k1/2 |x(q) - x_d|^2``."""
    x, y = _tool(params, float(q[0]), float(q[1]))
    return 0.5 * k1 * ((x - x_d[0]) ** 2 + (y - x_d[1]) ** 2)


def grad_lasalle(params: RobotParams, q, x_d, k1: float) -> np.ndarray:
    """Metric gradient of :func:`lasalle_potential`, ``G^-1 Dx^T k1 (x - x_d)``."""
    return np.array(_grad_lasalle(params, float(q[0]), float(q[1]), x_d, k1))


def tool_regulator(params: RobotParams, s: JointState, x_d, gains: Gains,
                   potential: PotentialSpec = NO_POTENTIAL) -> ControlOutput:
    """``u = grad U - k v - grad V``: compensate ``U``, damp, pull the tool to ``x_d``."""
    return _regulator_output(params, s.q, s.v, x_d, gains, potential)


def _regulator_output(params, q, v, x_d, gains, potential):
    t1, t2 = float(q[0]), float(q[1])
    gv1, gv2 = _grad_lasalle(params, t1, t2, x_d, gains.k1)
    gu1, gu2 = potential._grad(params, t1, t2)
    u = np.array([gu1 - gains.k * v[0] - gv1, gu2 - gains.k * v[1] - gv2])
    return ControlOutput(u=u, tangential=u)


def make_tool_regulator(params: RobotParams, x_d, gains: Gains,
                        potential: PotentialSpec = NO_POTENTIAL):
    x_d = (float(x_d[0]), float(x_d[1]))

    def controller(q, v, t):
        return _regulator_output(params, q, v, x_d, gains, potential)

    return controller


# -- constraint geometry --------------------------------------------------------

def psi(params: RobotParams, q, c: Constraint) -> float:
    """Constraint residual ``Phi(x(q))``; zero exactly on ``N``."""
    return c.phi(*_tool(params, float(q[0]), float(q[1])))


def grad_psi(params: RobotParams, q, c: Constraint) -> np.ndarray:
    """Metric gradient of ``Psi``: ``G^-1 Dx^T grad Phi(x(q))``."""
    return np.array(_grad_psi(params, c, float(q[0]), float(q[1])))


def lambda_normal(params: RobotParams, s: JointState, c: Constraint, eps1: float = DEFAULT_EPS,
                  h: float = FIELD_STEP) -> float:
    """Coefficient of the normal constraint force along ``grad Psi``."""
    return _lambda(params, c, s.q, s.v, eps1, h)[0]


def _lambda(params, c, q, v, eps1, h=FIELD_STEP):
    t1, t2 = float(q[0]), float(q[1])
    n1, n2 = _grad_psi(params, c, t1, t2)
    norm2 = _inner(params, t1, t2, n1, n2, n1, n2)
    denom = norm2 + eps1
    if denom == 0.0:
        raise SingularGradient("grad Psi vanished and eps1 = 0")
    if v[0] == 0.0 and v[1] == 0.0:
        return 0.0, (n1, n2), norm2

    def field(a, b):
        return (n1, n2) if (a == t1 and b == t2) else _grad_psi(params, c, a, b)

    D1, D2 = _covariant_derivative_entries(field, params, t1, t2, float(v[0]), float(v[1]), h)
    lam = -_inner(params, t1, t2, D1, D2, v[0], v[1]) / denom
    return lam, (n1, n2), norm2


def project_tangent(params: RobotParams, q, w, c: Constraint, eps2: float = DEFAULT_EPS) -> np.ndarray:
    """``w - g(w, n) n`` with ``n = grad Psi / (|grad Psi| + eps2)``."""
    t1, t2 = float(q[0]), float(q[1])
    n1, n2 = _grad_psi(params, c, t1, t2)
    norm = math.sqrt(_inner(params, t1, t2, n1, n2, n1, n2))
    return np.array(_project(params, t1, t2, w[0], w[1], n1, n2, norm, eps2))


def _project(params, t1, t2, w1, w2, n1, n2, norm, eps2):
    denom = norm + eps2
    if denom == 0.0:
        raise SingularGradient("grad Psi vanished and eps2 = 0")
    n1, n2 = n1 / denom, n2 / denom
    c = _inner(params, t1, t2, w1, w2, n1, n2)
    return w1 - c * n1, w2 - c * n2


def _constrained_output(params, c, q, v, x_d, gains, lambda_scale=1.0, h=FIELD_STEP):
    t1, t2 = float(q[0]), float(q[1])
    lam, (n1, n2), norm2 = _lambda(params, c, q, v, gains.eps1, h)
    lam *= lambda_scale
    norm = math.sqrt(norm2)
    gv1, gv2 = _grad_lasalle(params, t1, t2, x_d, gains.k1)
    pv1, pv2 = _project(params, t1, t2, gv1, gv2, n1, n2, norm, gains.eps2)
    pw1, pw2 = _project(params, t1, t2, v[0], v[1], n1, n2, norm, gains.eps2)
    normal = np.array([lam * n1, lam * n2])
    tangential = np.array([-pv1 - gains.k * pw1, -pv2 - gains.k * pw2])
    return ControlOutput(u=normal + tangential, lam=lam, normal=normal, tangential=tangential,
                         psi=psi(params, q, c))


def constrained_regulator(params: RobotParams, s: JointState, x_d, gains: Gains,
                          c: Constraint) -> ControlOutput:
    """``u = lambda grad Psi - (grad V)_par - k v_par``."""
    return _constrained_output(params, c, s.q, s.v, x_d, gains)


def make_constrained_regulator(params: RobotParams, x_d, gains: Gains, c: Constraint,
                               lambda_scale: float = 1.0):
    x_d = (float(x_d[0]), float(x_d[1]))

    def controller(q, v, t):
        return _constrained_output(params, c, q, v, x_d, gains, lambda_scale)

    return controller


def make_normal_only(params: RobotParams, c: Constraint, eps1: float = DEFAULT_EPS,
                     lambda_scale: float = 1.0,
                     tangential: Optional[Callable[[np.ndarray, np.ndarray, float], np.ndarray]] = None,
                     eps2: float = 0.0):
    """Controller applying only ``lambda grad Psi``, plus an optional tangential law.

    ``tangential(q, v, t)`` is projected onto ``ker dPsi`` (with ``eps2``)
    before being added. ``lambda_scale`` multiplies the normal coefficient;
    values other than one break constraint invariance.
    """

    def controller(q, v, t):
        lam, (n1, n2), norm2 = _lambda(params, c, q, v, eps1)
        lam *= lambda_scale
        normal = np.array([lam * n1, lam * n2])
        if tangential is None:
            tan = np.zeros(2)
        else:
            w = tangential(q, v, t)
            tan = np.array(_project(params, q[0], q[1], w[0], w[1], n1, n2, math.sqrt(norm2), eps2))
        return ControlOutput(u=normal + tan, lam=lam, normal=normal, tangential=tan,
                             psi=psi(params, q, c))

    return controller


def newton_project(params: RobotParams, q_guess, c: Constraint, tol: float = 1e-12,
                   max_steps: int = 50):
    """Move ``q_guess`` onto ``N`` with minimum-metric-norm Newton steps.

    Returns ``(q, steps)``.
    """
    q = as_point(q_guess).copy()
    for steps in range(max_steps + 1):
        value = psi(params, q, c)
        if abs(value) <= tol:
            return q, steps
        if steps == max_steps:
            break
        n = grad_psi(params, q, c)
        norm2 = _inner(params, q[0], q[1], n[0], n[1], n[0], n[1])
        if math.sqrt(norm2) < GRADIENT_FLOOR:
            raise SingularGradient(f"|grad Psi| = {math.sqrt(norm2):.3g} at q={q}")
        q = q - (value / norm2) * n
    raise NoConvergence(f"Newton projection did not reach |Psi| <= {tol} in {max_steps} steps")


def init_on_constraint(params: RobotParams, q_guess, v_guess, c: Constraint) -> JointState:
    """State on ``N`` near ``q_guess`` with velocity tangent to ``N``."""
    q, _ = newton_project(params, q_guess, c)
    v = project_tangent(params, q, as_point(v_guess), c, eps2=0.0)
    return JointState(q, v)


# -- hypothesis check for the constrained regulator ------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    point: np.ndarray
    distance: float
    is_target: bool


def constrained_critical_points(x_d, c: EllipseConstraint, n: int = 3600,
                                tol: float = 1e-9) -> list:
    """Critical points of ``|p - x_d|^2`` for ``p`` on the ellipse.

    Without singular points on ``N`` these are the images of the critical
    points of ``V`` restricted to ``N``. Convergence of the constrained
    regulator to ``x_d`` needs every one of them to coincide with ``x_d``;
    the others are returned with ``is_target = False``.
    """
    x_d = np.asarray(x_d, float)

    def slope(s):
        return float(np.dot(c.point(s) - x_d, c.tangent(s)))

    grid = np.linspace(0.0, 2.0 * math.pi, n + 1)
    values = [slope(s) for s in grid]
    found = []
    for i in range(n):
        a, b, fa, fb = grid[i], grid[i + 1], values[i], values[i + 1]
        if fa == 0.0:
            root = a
        elif fa * fb < 0.0:
            root = brentq(slope, a, b, xtol=1e-14)
        else:
            continue
        p = c.point(root)
        if any(np.linalg.norm(p - other.point) < 1e-7 for other in found):
            continue
        d = float(np.linalg.norm(p - x_d))
        found.append(CriticalPoint(point=p, distance=d, is_target=d <= tol))
    return found
