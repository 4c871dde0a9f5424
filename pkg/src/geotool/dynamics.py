"""Forced geodesic equations of motion, RK4 integration and energy checks.

The equation of motion in the chart is

    theta_ddot^k = -gamma[k, i, j] theta_dot^i theta_dot^j - (grad U)^k + u^k

where ``u`` is a tangent-vector control acting directly on the acceleration.

Controllers are callables ``controller(q, v, t)`` returning an object with
attribute ``u`` (tangent vector) and optionally ``lam`` and ``psi``;
:class:`geotool.control.ControlOutput` is the canonical one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonFinite
from .geometry import RobotParams, _christoffel_entries, _metric_entries, as_point, wrap
from .kinematics import _tool, singularity_margin

#: Samples whose singularity margin falls below this are flagged.
SINGULAR_FLAG = 1e-3


@dataclass(frozen=True)
class JointState:
    """A point of the tangent bundle: chart position ``q`` and velocity ``v``."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q, v = as_point(self.q).copy(), as_point(self.v).copy()
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise NonFinite(f"non-finite joint state q={q}, v={v}")
        q.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @classmethod
    def of(cls, theta1=0.0, theta2=0.0, v1=0.0, v2=0.0) -> "JointState":
        return cls(np.array([theta1, theta2], float), np.array([v1, v2], float))

    @property
    def wrapped(self) -> np.ndarray:
        return wrap(self.q)


@dataclass(frozen=True)
class PotentialSpec:
    """Potential energy acting on the arm.

    ``gravity`` is the gravitational acceleration along -y (m/s^2); zero gives
    the potential-free robot. Link centers of mass sit at link midpoints.
    """

    gravity: float = 0.0

    def value(self, params: RobotParams, q) -> float:
        if self.gravity == 0.0:
            return 0.0
        s1, s2 = math.sin(float(q[0])), math.sin(float(q[1]))
        y1 = 0.5 * params.l1 * s1
        y2 = params.l1 * s1 + 0.5 * params.l2 * s2
        return self.gravity * (params.m1 * y1 + params.m2 * y2)

    def differential(self, params: RobotParams, q) -> np.ndarray:
        if self.gravity == 0.0:
            return np.zeros(2)
        c1, c2 = math.cos(float(q[0])), math.cos(float(q[1]))
        return self.gravity * np.array([(0.5 * params.m1 + params.m2) * params.l1 * c1,
                                        0.5 * params.m2 * params.l2 * c2])

    def _grad(self, params: RobotParams, t1: float, t2: float):
        if self.gravity == 0.0:
            return 0.0, 0.0
        p1 = self.gravity * (0.5 * params.m1 + params.m2) * params.l1 * math.cos(t1)
        p2 = self.gravity * 0.5 * params.m2 * params.l2 * math.cos(t2)
        g11, g12, g22 = _metric_entries(params, t1, t2)
        det = g11 * g22 - g12 * g12
        return (g22 * p1 - g12 * p2) / det, (g11 * p2 - g12 * p1) / det

    def gradient(self, params: RobotParams, q) -> np.ndarray:
        return np.array(self._grad(params, float(q[0]), float(q[1])))


NO_POTENTIAL = PotentialSpec()


@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    potential: float
    total: float
    power: float


def _kinetic(params: RobotParams, t1, t2, w1, w2) -> float:
    g11, g12, g22 = _metric_entries(params, t1, t2)
    return 0.5 * (g11 * w1 * w1 + 2.0 * g12 * w1 * w2 + g22 * w2 * w2)


def kinetic_energy(params: RobotParams, s: JointState) -> float:
    """``0.5 v^T G(q) v``, expanded term by term."""
    t1, t2 = s.q
    w1, w2 = s.v
    return (0.125 * (params.m1 + 4.0 * params.m2) * params.l1**2 * w1 * w1
            + 0.125 * params.m2 * params.l2**2 * w2 * w2
            + 0.5 * params.m2 * params.l1 * params.l2 * math.cos(t1 - t2) * w1 * w2
            + 0.5 * params.J1 * w1 * w1 + 0.5 * params.J2 * w2 * w2)


def energy_report(params: RobotParams, s: JointState, u=None,
                  potential: PotentialSpec = NO_POTENTIAL) -> EnergyReport:
    """Kinetic, potential and total energy, and the power ``g(u, v)``."""
    t1, t2 = float(s.q[0]), float(s.q[1])
    w1, w2 = float(s.v[0]), float(s.v[1])
    T = _kinetic(params, t1, t2, w1, w2)
    U = potential.value(params, s.q)
    power = 0.0
    if u is not None:
        g11, g12, g22 = _metric_entries(params, t1, t2)
        power = g11 * u[0] * w1 + g12 * (u[0] * w2 + u[1] * w1) + g22 * u[1] * w2
    return EnergyReport(T, U, T + U, float(power))


def _acceleration(params, potential, t1, t2, w1, w2, u1, u2):
    c111, c122, c211, c222 = _christoffel_entries(params, t1, t2)
    gu1, gu2 = potential._grad(params, t1, t2)
    return (-(c111 * w1 * w1 + c122 * w2 * w2) - gu1 + u1,
            -(c211 * w1 * w1 + c222 * w2 * w2) - gu2 + u2)


def forced_acceleration(params: RobotParams, s: JointState, u=None,
                        potential: PotentialSpec = NO_POTENTIAL) -> np.ndarray:
    """Chart acceleration of the forced geodesic equation at state ``s``."""
    u1, u2 = (0.0, 0.0) if u is None else (float(u[0]), float(u[1]))
    return np.array(_acceleration(params, potential, float(s.q[0]), float(s.q[1]),
                                  float(s.v[0]), float(s.v[1]), u1, u2))


Controller = Callable[[np.ndarray, np.ndarray, float], object]


def _rk4(params, potential, controller, y, t, dt):
    """One classical RK4 step on y = (q1, q2, v1, v2); controller sampled per stage."""

    def f(y, t):
        if controller is None:
            u1 = u2 = 0.0
        else:
            u = controller(y[:2], y[2:], t).u
            u1, u2 = u[0], u[1]
        a1, a2 = _acceleration(params, potential, y[0], y[1], y[2], y[3], u1, u2)
        return np.array([y[2], y[3], a1, a2])

    half = 0.5 * dt
    k1 = f(y, t)
    k2 = f(y + half * k1, t + half)
    k3 = f(y + half * k2, t + half)
    k4 = f(y + dt * k3, t + dt)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _guarded_rk4(params, potential, controller, y, t, dt):
    # a non-finite intermediate stage trips math-domain errors before the
    # end-of-step check can see it
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            return _rk4(params, potential, controller, y, t, dt)
    except (ValueError, OverflowError, NonFinite) as exc:
        raise NonFinite(f"non-finite state within step at t={t + dt:g} ({exc})", time=t + dt) from exc


def rk4_step(params: RobotParams, s: JointState, controller: Optional[Controller], dt: float,
             t: float = 0.0, potential: PotentialSpec = NO_POTENTIAL) -> JointState:
    """Advance ``s`` by one RK4 step of size ``dt`` starting at time ``t``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    y = _guarded_rk4(params, potential, controller, np.concatenate([s.q, s.v]), t, dt)
    if not np.all(np.isfinite(y)):
        raise NonFinite(f"non-finite state after step at t={t + dt}", time=t + dt)
    return JointState(y[:2], y[2:])


@dataclass
class Trajectory:
    """Sampled simulation output. Per-sample arrays share the first axis.

    ``lam`` and ``psi`` hold NaN where no constraint is active.
    """

    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    tool: np.ndarray
    u: np.ndarray
    lam: np.ndarray
    psi: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray
    total: np.ndarray
    power: np.ndarray
    sing_margin: np.ndarray
    final_state: JointState
    final_time: float
    constrained: bool = False
    metric_norm_v: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def q_wrapped(self) -> np.ndarray:
        return wrap(self.q)

    @property
    def singular_flags(self) -> np.ndarray:
        return self.sing_margin < SINGULAR_FLAG

    def state(self, i: int) -> JointState:
        return JointState(self.q[i], self.v[i])


def simulate(params: RobotParams, initial: JointState, controller: Optional[Controller] = None,
             dt: float = 1e-3, duration: float = 10.0, stride: int = 1,
             potential: PotentialSpec = NO_POTENTIAL,
             psi_fn: Optional[Callable[[np.ndarray], float]] = None) -> Trajectory:
    """Integrate from ``initial`` and record every ``stride``-th step.

    ``duration`` must be an integer multiple of ``dt``. When ``psi_fn`` is
    given its value is recorded per sample as the constraint residual.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not duration >= 0:
        raise ValueError("duration must be non-negative")
    if int(stride) != stride or stride < 1:
        raise ValueError("stride must be an integer >= 1")
    n_steps = int(round(duration / dt))
    if abs(n_steps * dt - duration) > 1e-9 * max(1.0, duration):
        raise ValueError("duration must be a multiple of dt")
    stride = int(stride)
    n_samples = n_steps // stride + 1

    rows = np.empty((n_samples, 4))
    u_rows = np.zeros((n_samples, 2))
    lam = np.full(n_samples, np.nan)
    psi = np.full(n_samples, np.nan)
    energy = np.empty((n_samples, 4))

    def record(i, y, t):
        rows[i] = y
        q, v = y[:2], y[2:]
        if controller is not None:
            out = controller(q, v, t)
            u_rows[i] = out.u
            lam[i] = getattr(out, "lam", np.nan)
        if psi_fn is not None:
            psi[i] = psi_fn(q)
        rep = energy_report(params, JointState(q, v), u_rows[i], potential)
        energy[i] = (rep.kinetic, rep.potential, rep.total, rep.power)

    y = np.concatenate([initial.q, initial.v])
    record(0, y, 0.0)
    for step in range(1, n_steps + 1):
        t0 = (step - 1) * dt
        y = _guarded_rk4(params, potential, controller, y, t0, dt)
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"non-finite state at t={step * dt:g}", time=step * dt)
        if step % stride == 0:
            record(step // stride, y, step * dt)

    times = np.arange(n_samples) * (stride * dt)
    tool = np.array([_tool(params, a, b) for a, b in rows[:, :2]]).reshape(n_samples, 2)
    margins = np.array([singularity_margin(params, r[:2]) for r in rows])
    return Trajectory(
        t=times, q=rows[:, :2].copy(), v=rows[:, 2:].copy(), tool=tool, u=u_rows, lam=lam, psi=psi,
        kinetic=energy[:, 0].copy(), potential=energy[:, 1].copy(), total=energy[:, 2].copy(),
        power=energy[:, 3].copy(), sing_margin=margins,
        final_state=JointState(y[:2], y[2:]), final_time=n_steps * dt,
        constrained=psi_fn is not None,
        metric_norm_v=np.sqrt(2.0 * np.maximum(energy[:, 0], 0.0)),
    )


def energy_rate_residual(traj: Trajectory, order: int = 2) -> float:
    """Largest mismatch between the sampled ``dE/dt`` and the power ``g(u, v)``.

    ``dE/dt`` is a centered difference of the total energy over neighbouring
    samples, three-point for ``order=2`` and five-point for ``order=4``; only
    samples with a full stencil are compared. Samples must be uniform.
    """
    E, P = traj.total, traj.power
    if order == 2:
        if len(traj) < 3:
            raise ValueError("need at least three samples")
        h = traj.t[2:] - traj.t[:-2]
        dE = (E[2:] - E[:-2]) / h
        return float(np.max(np.abs(dE - P[1:-1])))
    if order == 4:
        if len(traj) < 5:
            raise ValueError("need at least five samples")
        h = traj.t[1] - traj.t[0]
        dE = (E[:-4] - 8.0 * E[1:-3] + 8.0 * E[3:-1] - E[4:]) / (12.0 * h)
        return float(np.max(np.abs(dE - P[2:-2])))
    raise ValueError("order must be 2 or 4")
