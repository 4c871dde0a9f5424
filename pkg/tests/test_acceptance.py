"""Acceptance criteria C1-C8.

Each test records a PASS/FAIL line that the terminal summary prints at the
end of the session (see ``conftest.py``). Tolerances and runtime budgets are
the criteria's own; none is loosened here.
"""

import math
import time
from types import SimpleNamespace

import numpy as np
import pytest

from geotool.control import (EllipseConstraint, grad_lasalle, grad_psi, init_on_constraint,
                             lasalle_potential, make_normal_only, psi)
from geotool.dynamics import JointState, energy_rate_residual, simulate
from geotool.geometry import RobotParams, christoffel_closed_form, christoffel_oracle, metric_at
from geotool.harness import load_scenario, run
from geotool.harness.runner import lasalle_energy
from geotool.kinematics import Region, singularity_margin, tool_jacobian, tool_position, workspace_contains

from conftest import record_acceptance

PARAMS = RobotParams()
ELLIPSE = EllipseConstraint(0.3, 0.6)


def timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def random_state(rng, vmax):
    q = rng.uniform(-math.pi, math.pi, 2)
    v = rng.normal(size=2)
    v *= rng.uniform(0.1, vmax) / metric_at(PARAMS, q).norm(v)
    return JointState(q, v)


def test_c1_christoffel_oracle():
    rng = np.random.default_rng(1)

    def sweep():
        worst = cross = 0.0
        metric = lambda p: metric_at(PARAMS, p)
        for q in rng.uniform(-math.pi, math.pi, size=(1000, 2)):
            closed = christoffel_closed_form(PARAMS, q).gamma
            oracle = christoffel_oracle(metric, q).gamma
            worst = max(worst, float(np.max(np.abs(closed - oracle))))
            cross = max(cross, float(np.max(np.abs(oracle[:, 0, 1]))), float(np.max(np.abs(oracle[:, 1, 0]))))
        return worst, cross

    (worst, cross), elapsed = timed(sweep)
    ok = worst <= 1e-8 and cross <= 1e-8 and elapsed < 5
    record_acceptance("C1 christoffel oracle", ok,
                      f"max diff {worst:.1e}, max cross symbol {cross:.1e}, {elapsed:.1f}s")
    assert worst <= 1e-8
    assert cross <= 1e-8
    assert elapsed < 5


def test_c2_energy_theorem():
    rng = np.random.default_rng(2)

    def runs():
        drift = residual = 0.0
        states = [random_state(rng, 2.0) for _ in range(20)]
        for s in states:
            traj = simulate(PARAMS, s, None, dt=1e-3, duration=10.0, stride=1)
            drift = max(drift, float(np.max(np.abs(traj.total - traj.total[0])) / traj.total[0]))
            residual = max(residual, energy_rate_residual(traj))
        k = 1.0
        friction = lambda q, v, t: SimpleNamespace(u=-k * v)
        friction_res = 0.0
        for s in states[:5]:
            traj = simulate(PARAMS, s, friction, dt=1e-3, duration=10.0, stride=1)
            dE = (traj.total[2:] - traj.total[:-2]) / (traj.t[2:] - traj.t[:-2])
            friction_res = max(friction_res, float(np.max(np.abs(dE + k * 2.0 * traj.kinetic[1:-1]))))
        return drift, residual, friction_res

    (drift, residual, friction_res), elapsed = timed(runs)
    ok = drift <= 1e-6 and residual <= 1e-6 and friction_res <= 1e-5 and elapsed < 30
    record_acceptance("C2 energy theorem", ok,
                      f"drift {drift:.1e}, residual {residual:.1e}, friction {friction_res:.1e}, "
                      f"{elapsed:.1f}s")
    assert drift <= 1e-6
    assert residual <= 1e-6
    assert friction_res <= 1e-5
    assert elapsed < 30


@pytest.mark.parametrize("name", ["paper-sim-1", "paper-sim-2"])
def test_c3_tool_regulator(name):
    scenario = load_scenario(name)
    (traj, metrics), elapsed = timed(lambda: run(scenario))
    L = lasalle_energy(traj, scenario)
    rise = float(np.max(np.diff(L), initial=0.0))
    ok = (metrics.final_tool_error < 1e-3 and metrics.final_speed < 1e-3 and rise <= 1e-6
          and elapsed < 20)
    record_acceptance(f"C3 tool regulator {name}", ok,
                      f"tool error {metrics.final_tool_error:.2e}, speed {metrics.final_speed:.1e}, "
                      f"max Lasalle rise {rise:.1e}, {elapsed:.1f}s")
    assert rise <= 1e-6
    assert elapsed < 20
    assert metrics.final_speed < 1e-3
    assert metrics.final_tool_error < 1e-3


def test_c4_constraint_invariance():
    rng = np.random.default_rng(4)

    def constrained_state():
        while True:
            try:
                s = init_on_constraint(PARAMS, rng.uniform(-math.pi, math.pi, 2), rng.normal(size=2), ELLIPSE)
            except Exception:
                continue
            norm = metric_at(PARAMS, s.q).norm(s.v)
            if norm > 1e-6 and singularity_margin(PARAMS, s.q) > 1e-3:
                return JointState(s.q, s.v * (rng.uniform(0.1, 1.0) / norm))

    psi_fn = lambda q: psi(PARAMS, q, ELLIPSE)

    def runs():
        base, perturbed = [], []
        for s in [constrained_state() for _ in range(10)]:
            for scale, out in ((1.0, base), (1.0 + 1e-3, perturbed)):
                ctrl = make_normal_only(PARAMS, ELLIPSE, lambda_scale=scale)
                traj = simulate(PARAMS, s, ctrl, dt=1e-3, duration=10.0, stride=10, psi_fn=psi_fn)
                out.append(float(np.max(np.abs(traj.psi))))
        return np.array(base), np.array(perturbed)

    (base, perturbed), elapsed = timed(runs)
    growth = float(np.min(perturbed / base))
    ok = base.max() <= 1e-6 and growth >= 10 and elapsed < 60
    record_acceptance("C4 constraint invariance", ok,
                      f"max |Psi| {base.max():.1e}, min growth {growth:.2g}x, {elapsed:.1f}s")
    assert base.max() <= 1e-6
    assert growth >= 10
    assert elapsed < 60


def test_c5_constrained_regulator():
    scenario = load_scenario("paper-constrained")
    assert scenario.constraint == ELLIPSE and scenario.x_d == (0.0, 0.3)
    assert (scenario.k1, scenario.k, scenario.eps1, scenario.eps2) == (40.0, 30.0, 1e-28, 1e-28)
    (traj, metrics), elapsed = timed(lambda: run(scenario))
    ok = metrics.final_tool_error < 1e-2 and metrics.max_psi < 1e-4 and elapsed < 20
    record_acceptance("C5 constrained regulator", ok,
                      f"tool error {metrics.final_tool_error:.3e}, max |Psi| {metrics.max_psi:.1e}, "
                      f"{elapsed:.1f}s")
    assert metrics.max_psi < 1e-4
    assert elapsed < 20
    assert metrics.final_tool_error < 1e-2


def fd_metric_gradient(f, q, h=1e-3):
    """Five-point central differential of ``f`` raised through the inverse metric."""
    d = np.empty(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        d[i] = (f(q - 2 * e) - 8 * f(q - e) + 8 * f(q + e) - f(q + 2 * e)) / (12 * h)
    return np.linalg.solve(metric_at(PARAMS, q).matrix(), d)


def test_c6_gradient_oracles():
    rng = np.random.default_rng(6)
    x_d, k1 = (0.0, 0.6), 1.0

    def sweep():
        worst_v = worst_psi = 0.0
        for q in rng.uniform(-math.pi, math.pi, size=(500, 2)):
            fd_v = fd_metric_gradient(lambda p: lasalle_potential(PARAMS, p, x_d, k1), q)
            fd_psi = fd_metric_gradient(lambda p: psi(PARAMS, p, ELLIPSE), q)
            worst_v = max(worst_v, float(np.max(np.abs(grad_lasalle(PARAMS, q, x_d, k1) - fd_v))))
            worst_psi = max(worst_psi, float(np.max(np.abs(grad_psi(PARAMS, q, ELLIPSE) - fd_psi))))
        return worst_v, worst_psi

    (worst_v, worst_psi), elapsed = timed(sweep)
    ok = worst_v <= 1e-7 and worst_psi <= 1e-7 and elapsed < 5
    record_acceptance("C6 gradient oracles", ok,
                      f"grad V {worst_v:.1e}, grad Psi {worst_psi:.1e}, {elapsed:.1f}s")
    assert worst_v <= 1e-7
    assert worst_psi <= 1e-7
    assert elapsed < 5


def test_c7_kinematics_identities():
    rng = np.random.default_rng(7)

    def sweep():
        worst, outside = 0.0, 0
        for q in rng.uniform(-math.pi, math.pi, size=(1000, 2)):
            expected = PARAMS.l1 * PARAMS.l2 * math.sin(q[1] - q[0])
            det = tool_jacobian(PARAMS, q).det
            worst = max(worst, abs(det - expected) / max(abs(expected), 1e-300))
            outside += workspace_contains(PARAMS, tool_position(PARAMS, q)) is Region.OUTSIDE
        return worst, outside

    (worst, outside), elapsed = timed(sweep)
    ok = worst <= 1e-12 and outside == 0 and elapsed < 2
    record_acceptance("C7 kinematics identities", ok,
                      f"det rel err {worst:.1e}, outside {outside}, {elapsed:.2f}s")
    assert worst <= 1e-12
    assert outside == 0
    assert elapsed < 2


def test_c8_integrator_order():
    s0 = JointState.of(0.3, -1.1, 1.5, -2.0)
    T, dt = 1.0, 0.02

    def final(step):
        n = int(round(T / step))
        end = simulate(PARAMS, s0, None, dt=step, duration=T, stride=n).final_state
        return np.concatenate([end.q, end.v])

    def measure():
        ref = final(dt / 100)
        e1 = np.max(np.abs(final(dt) - ref))
        e2 = np.max(np.abs(final(dt / 2) - ref))
        return math.log2(e1 / e2)

    order, elapsed = timed(measure)
    ok = 3.7 <= order <= 4.3 and elapsed < 10
    record_acceptance("C8 integrator order", ok, f"observed order {order:.3f}, {elapsed:.1f}s")
    assert 3.7 <= order <= 4.3
    assert elapsed < 10
