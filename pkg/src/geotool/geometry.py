"""Riemannian structure of the two-link configuration torus.

Points of the torus are handled in the (theta1, theta2) chart as float arrays
of shape ``(2,)``; tangent vectors and covectors use the same representation
in the coordinate basis and cobasis respectively. Angles are never wrapped
internally, :func:`wrap` exists for reporting.

Index convention for Christoffel symbols: ``gamma[k, i, j]`` is the symbol
with upper index ``k`` and lower indices ``i, j`` (zero based), so the
textbook symbol with upper 1 and lower 2, 2 lives at ``gamma[0, 1, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateMetric, NonFinite, ValidationError

TWO_PI = 2.0 * math.pi

#: Central-difference step for metric partials in the Christoffel oracle.
ORACLE_STEP = 1e-5
#: Central-difference step for vector-field partials in covariant derivatives.
FIELD_STEP = 1e-6


def _rod_inertia(m: float, l: float) -> float:
    return m * l * l / 12.0


@dataclass(frozen=True)
class RobotParams:
    """Physical constants of the two links.

    Defaults describe two uniform 1 kg rods of length 0.4 m, with moments of
    inertia about their centers ``m l**2 / 12``.
    """

    m1: float = 1.0
    m2: float = 1.0
    l1: float = 0.4
    l2: float = 0.4
    J1: float = _rod_inertia(1.0, 0.4)
    J2: float = _rod_inertia(1.0, 0.4)
    # g11, g22 and the amplitude of g12; filled in by __post_init__
    inertia1: float = field(init=False, repr=False, compare=False)
    inertia2: float = field(init=False, repr=False, compare=False)
    coupling: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "J1", "J2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(name, f"must be a finite positive number, got {value!r}")
            object.__setattr__(self, name, float(value))
        object.__setattr__(self, "inertia1", self.J1 + 0.25 * (self.m1 + 4.0 * self.m2) * self.l1**2)
        object.__setattr__(self, "inertia2", self.J2 + 0.25 * self.m2 * self.l2**2)
        object.__setattr__(self, "coupling", 0.5 * self.m2 * self.l1 * self.l2)


def as_point(q) -> np.ndarray:
    """Coerce a chart point, tangent vector or covector to a float array."""
    arr = np.asarray(q, dtype=float)
    if arr.shape != (2,):
        raise ValueError(f"expected two components, got shape {arr.shape}")
    return arr


def wrap(theta):
    """Reduce angles to the interval (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    out = math.pi - np.mod(math.pi - theta, TWO_PI)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MetricTensor:
    """Symmetric 2x2 metric matrix; only the upper triangle is stored."""

    g11: float
    g12: float
    g22: float

    @property
    def det(self) -> float:
        return self.g11 * self.g22 - self.g12 * self.g12

    def is_positive_definite(self) -> bool:
        return self.g11 > 0.0 and self.det > 0.0

    def _checked_det(self) -> float:
        det = self.det
        if not (self.g11 > 0.0 and det > 0.0):
            raise DegenerateMetric(f"metric not positive definite (g11={self.g11}, det={det})")
        return det

    def inverse(self) -> "MetricTensor":
        """Entries of the inverse matrix, packed as a MetricTensor."""
        det = self._checked_det()
        return MetricTensor(self.g22 / det, -self.g12 / det, self.g11 / det)

    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    def inner(self, v, w) -> float:
        """g(v, w)."""
        return (self.g11 * v[0] * w[0] + self.g12 * (v[0] * w[1] + v[1] * w[0])
                + self.g22 * v[1] * w[1])

    def norm(self, v) -> float:
        return math.sqrt(max(self.inner(v, v), 0.0))

    def flat(self, v) -> np.ndarray:
        """Lower an index: the covector ``g(v, .)``."""
        return np.array([self.g11 * v[0] + self.g12 * v[1], self.g12 * v[0] + self.g22 * v[1]])

    def sharp(self, p) -> np.ndarray:
        """Raise an index: the unique v with ``g(v, w) = p(w)`` for all w."""
        det = self._checked_det()
        return np.array([(self.g22 * p[0] - self.g12 * p[1]) / det,
                         (self.g11 * p[1] - self.g12 * p[0]) / det])


@dataclass(frozen=True)
class Christoffel:
    """Connection coefficients at one chart point, ``gamma[k, i, j]``."""

    gamma: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.gamma, dtype=float)
        if arr.shape != (2, 2, 2):
            raise ValueError(f"expected shape (2, 2, 2), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "gamma", arr)

    def __getitem__(self, idx):
        return self.gamma[idx]

    def contract(self, v, w=None) -> np.ndarray:
        """Sum over i, j of ``gamma[k, i, j] v[i] w[j]`` (``w`` defaults to ``v``)."""
        if w is None:
            w = v
        return np.einsum("kij,i,j->k", self.gamma, np.asarray(v, float), np.asarray(w, float))

    def max_asymmetry(self) -> float:
        return float(np.max(np.abs(self.gamma - np.swapaxes(self.gamma, 1, 2))))


# -- closed forms for the two-link metric --------------------------------------

def _metric_entries(params: RobotParams, t1: float, t2: float):
    return params.inertia1, params.coupling * math.cos(t1 - t2), params.inertia2


def _christoffel_entries(params: RobotParams, t1: float, t2: float):
    """The four nonzero symbols (upper1-11, upper1-22, upper2-11, upper2-22)."""
    g11, g12, g22 = _metric_entries(params, t1, t2)
    det = g11 * g22 - g12 * g12
    if not (g11 > 0.0 and det > 0.0):
        if not math.isfinite(det):
            raise NonFinite(f"non-finite configuration ({t1}, {t2})")
        raise DegenerateMetric(f"metric not positive definite (det={det})")
    m1, m2, l1, l2, J1, J2 = params.m1, params.m2, params.l1, params.l2, params.J1, params.J2
    d = t1 - t2
    s, s2 = math.sin(d), math.sin(2.0 * d)
    eight_det = 8.0 * det
    a = m2 * m2 * l1 * l1 * l2 * l2 * s2 / eight_det
    return (
        a,
        m2 * l1 * l2 * (4.0 * J2 + m2 * l2 * l2) * s / eight_det,
        -m2 * l1 * l2 * (4.0 * J1 + (m1 + 4.0 * m2) * l1 * l1) * s / eight_det,
        -a,
    )


def metric_at(params: RobotParams, q) -> MetricTensor:
    """Kinetic-energy metric of the two-link arm at chart point ``q``."""
    return MetricTensor(*_metric_entries(params, float(q[0]), float(q[1])))


def christoffel_closed_form(params: RobotParams, q) -> Christoffel:
    """Christoffel symbols of :func:`metric_at` from their closed forms.

    Symbols with mixed lower indices are identically zero for this metric and
    are returned as such.
    """
    c111, c122, c211, c222 = _christoffel_entries(params, float(q[0]), float(q[1]))
    gamma = np.zeros((2, 2, 2))
    gamma[0, 0, 0] = c111
    gamma[0, 1, 1] = c122
    gamma[1, 0, 0] = c211
    gamma[1, 1, 1] = c222
    return Christoffel(gamma)


def christoffel_oracle(metric_fn: Callable[[np.ndarray], MetricTensor], q,
                       h: float = ORACLE_STEP) -> Christoffel:
    """Levi-Civita symbols of an arbitrary chart metric by central differences.

    Evaluates ``0.5 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)`` with the metric
    partials estimated on a +-h stencil. Truncation error is O(h**2).
    """
    if not h > 0:
        raise ValueError("h must be positive")
    q = as_point(q)
    dg = np.empty((2, 2, 2))  # dg[l, i, j] = d_l g_ij
    for l in range(2):
        step = np.zeros(2)
        step[l] = h
        plus, minus = metric_fn(q + step), metric_fn(q - step)
        for m in (plus, minus):
            if not m.is_positive_definite():
                raise DegenerateMetric("metric not positive definite on the stencil")
        dg[l] = (plus.matrix() - minus.matrix()) / (2.0 * h)
    ginv = metric_fn(q).inverse().matrix()
    # first kind: lowered[l, i, j] = 0.5 (d_i g_jl + d_j g_il - d_l g_ij)
    lowered = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    return Christoffel(np.einsum("kl,lij->kij", ginv, lowered))


def sharp(G: MetricTensor, p) -> np.ndarray:
    """Tangent vector metrically dual to covector ``p``."""
    return G.sharp(p)


def flat(G: MetricTensor, v) -> np.ndarray:
    """Covector metrically dual to tangent vector ``v``."""
    return G.flat(v)


def gradient(G: MetricTensor, dV) -> np.ndarray:
    """Metric gradient of a function whose differential at the point is ``dV``."""
    return G.sharp(dV)


def covariant_derivative_along(field: Callable[[np.ndarray], np.ndarray], q, v,
                               params: Optional[RobotParams] = None, h: float = FIELD_STEP,
                               connection: Optional[Callable[[np.ndarray], Christoffel]] = None,
                               ) -> np.ndarray:
    """Covariant derivative DX/Dt of a vector field along a curve.

    The curve passes through ``q`` with velocity ``v``. Component ``k`` is

        sum_i dX_k/dq_i v_i + sum_ij gamma[k, i, j] v_i X_j

    with the field partials taken by central differences of step ``h``. The
    connection defaults to the two-link closed form for ``params``; pass
    ``connection`` to use another metric.
    """
    q = as_point(q)
    v = as_point(v)
    if connection is None:
        if params is None:
            raise ValueError("either params or connection is required")
        return np.array(_covariant_derivative_entries(
            lambda a, b: field(np.array([a, b])), params, q[0], q[1], v[0], v[1], h))
    X = np.asarray(field(q), dtype=float)
    conn = connection(q).contract(v, X)
    directional = np.zeros(2)
    for i in range(2):
        if v[i] == 0.0:
            continue
        plus, minus = q.copy(), q.copy()
        plus[i] += h
        minus[i] -= h
        directional += (np.asarray(field(plus), float) - np.asarray(field(minus), float)) * (v[i] / (2.0 * h))
    return directional + conn


def _covariant_derivative_entries(field, params: RobotParams, t1, t2, v1, v2, h=FIELD_STEP):
    """Scalar kernel of :func:`covariant_derivative_along` for the two-link metric.

    ``field(t1, t2)`` returns the two components of the vector field.
    """
    c111, c122, c211, c222 = _christoffel_entries(params, t1, t2)
    x1, x2 = field(t1, t2)
    d1 = c111 * v1 * x1 + c122 * v2 * x2
    d2 = c211 * v1 * x1 + c222 * v2 * x2
    if v1 != 0.0:
        p1, p2 = field(t1 + h, t2)
        m1, m2 = field(t1 - h, t2)
        w = v1 / (2.0 * h)
        d1 += (p1 - m1) * w
        d2 += (p2 - m2) * w
    if v2 != 0.0:
        p1, p2 = field(t1, t2 + h)
        m1, m2 = field(t1, t2 - h)
        w = v2 / (2.0 * h)
        d1 += (p1 - m1) * w
        d2 += (p2 - m2) * w
    return d1, d2
