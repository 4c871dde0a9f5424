"""Numerical invariant suite behind ``geotool verify``.

Each check takes a ``quick`` flag (smaller samples, shorter horizons) and
returns ``(passed, detail)``. :data:`CHECKS` is the registry the CLI runs.
"""

from __future__ import annotations

import dataclasses
import filecmp
import math
import tempfile
import time
from typing import Callable, List, Tuple

import numpy as np

from . import control as ctl
from .dynamics import JointState, energy_rate_residual, simulate
from .geometry import (RobotParams, christoffel_closed_form, christoffel_oracle,
                       covariant_derivative_along, metric_at)
from .harness.export import write_csv
from .harness.runner import lasalle_energy, run
from .harness.scenario import builtin_names, load_scenario
from .kinematics import (Region, singularity_margin, tool_jacobian, tool_position,
                         workspace_contains)

Check = Callable[[bool], Tuple[bool, str]]
PARAMS = RobotParams()
REFERENCE_ELLIPSE = ctl.EllipseConstraint(0.3, 0.6)
SEED = 20240601


def _rng():
    return np.random.default_rng(SEED)


def _points(rng, n):
    return rng.uniform(-math.pi, math.pi, size=(n, 2))


def inverse_kinematics(params: RobotParams, p, elbow: int = 1) -> np.ndarray:
    """Absolute joint angles placing the tool at ``p`` (test helper)."""
    x, y = p
    r2 = x * x + y * y
    c = (r2 - params.l1**2 - params.l2**2) / (2.0 * params.l1 * params.l2)
    delta = elbow * math.acos(max(-1.0, min(1.0, c)))
    t1 = math.atan2(y, x) - math.atan2(params.l2 * math.sin(delta), params.l1 + params.l2 * math.cos(delta))
    return np.array([t1, t1 + delta])


def random_constrained_state(params, c, rng, vmax=1.0):
    """State on the constraint with a random tangent velocity of metric norm <= vmax."""
    while True:
        guess = rng.uniform(-math.pi, math.pi, size=2)
        try:
            q, _ = ctl.newton_project(params, guess, c)
        except (ctl.SingularGradient, ctl.NoConvergence):
            continue
        w = ctl.project_tangent(params, q, rng.normal(size=2), c, eps2=0.0)
        norm = metric_at(params, q).norm(w)
        if norm > 1e-6:
            return JointState(q, w * (rng.uniform(0.1, 1.0) * vmax / norm))


# -- geometry -------------------------------------------------------------------

def check_positive_definite(quick):
    pts = _points(_rng(), 200 if quick else 1000)
    bad = [q for q in pts if not metric_at(PARAMS, q).is_positive_definite()]
    return not bad, f"{len(bad)} of {len(pts)} points not positive definite"


def check_christoffel_oracle(quick, tol=1e-8):
    pts = _points(_rng(), 200 if quick else 1000)
    worst = 0.0
    for q in pts:
        closed = christoffel_closed_form(PARAMS, q).gamma
        oracle = christoffel_oracle(lambda p: metric_at(PARAMS, p), q).gamma
        worst = max(worst, float(np.max(np.abs(closed - oracle))))
    return worst <= tol, f"max |closed - oracle| = {worst:.2e} (tol {tol:g})"


def check_christoffel_symmetry(quick):
    pts = _points(_rng(), 100 if quick else 500)
    worst = max(max(christoffel_closed_form(PARAMS, q).max_asymmetry(),
                    christoffel_oracle(lambda p: metric_at(PARAMS, p), q).max_asymmetry())
                for q in pts)
    return worst == 0.0, f"max lower-index asymmetry = {worst:.2e}"


def _field(a, b):
    return lambda q: np.array([math.sin(a * q[0] + q[1]), math.cos(q[0] - b * q[1])])


def check_metric_compatibility(quick, tol=1e-6):
    rng = _rng()
    worst = 0.0
    for _ in range(20 if quick else 100):
        q0, v = rng.uniform(-math.pi, math.pi, 2), rng.normal(size=2)
        X = _field(*rng.uniform(-2, 2, 2))
        h = 1e-5

        def gxx(t):
            q = q0 + t * v
            return metric_at(PARAMS, q).inner(X(q), X(q))

        lhs = (gxx(h) - gxx(-h)) / (2 * h)
        D = covariant_derivative_along(X, q0, v, PARAMS)
        rhs = 2.0 * metric_at(PARAMS, q0).inner(D, X(q0))
        worst = max(worst, abs(lhs - rhs))
    return worst <= tol, f"max |d/dt g(X,X) - 2 g(DX/dt, X)| = {worst:.2e}"


def check_sharp_flat(quick, tol=1e-12):
    rng = _rng()
    worst = 0.0
    for q in _points(rng, 200 if quick else 1000):
        G = metric_at(PARAMS, q)
        p = rng.normal(size=2)
        v = rng.normal(size=2)
        worst = max(worst, np.max(np.abs(G.flat(G.sharp(p)) - p)) / max(1.0, np.max(np.abs(p))),
                    np.max(np.abs(G.sharp(G.flat(v)) - v)) / max(1.0, np.max(np.abs(v))))
    return worst <= tol, f"max round-trip error = {worst:.2e}"


# -- kinematics -----------------------------------------------------------------

def check_periodicity(quick, tol=1e-12):
    worst = 0.0
    for q in _points(_rng(), 200 if quick else 1000):
        for shift in ([2 * math.pi, 0], [0, 2 * math.pi], [-2 * math.pi, 2 * math.pi]):
            p = q + np.array(shift)
            worst = max(worst, np.max(np.abs(tool_position(PARAMS, p) - tool_position(PARAMS, q))),
                        np.max(np.abs(tool_jacobian(PARAMS, p).matrix() - tool_jacobian(PARAMS, q).matrix())))
    return worst <= tol, f"max periodicity defect = {worst:.2e}"


def check_jacobian_determinant(quick, tol=1e-12):
    worst = 0.0
    for q in _points(_rng(), 200 if quick else 1000):
        det = tool_jacobian(PARAMS, q).det
        exact = PARAMS.l1 * PARAMS.l2 * math.sin(q[1] - q[0])
        worst = max(worst, abs(det - exact) / (PARAMS.l1 * PARAMS.l2))
    return worst <= tol, f"max relative determinant defect = {worst:.2e}"


def check_workspace(quick):
    pts = _points(_rng(), 200 if quick else 1000)
    outside = sum(workspace_contains(PARAMS, tool_position(PARAMS, q)) == Region.OUTSIDE for q in pts)
    return outside == 0, f"{outside} tool positions classified outside"


def check_singular_set(quick):
    rng = _rng()
    bad = 0
    for t in rng.uniform(-10, 10, 100 if quick else 500):
        for offset in (0.0, math.pi, -math.pi):
            if singularity_margin(PARAMS, [t, t + offset]) > 1e-15:
                bad += 1
        for offset in (1e-6, math.pi / 2, math.pi - 1e-6):
            if singularity_margin(PARAMS, [t, t + offset]) == 0.0:
                bad += 1
    return bad == 0, f"{bad} misclassified points"


# -- dynamics -------------------------------------------------------------------

def check_free_energy_conservation(quick, tol=1e-6):
    rng = _rng()
    n, duration = (3, 2.0) if quick else (20, 10.0)
    worst = 0.0
    for _ in range(n):
        q = rng.uniform(-math.pi, math.pi, 2)
        v = rng.normal(size=2)
        v *= rng.uniform(0.2, 2.0) / metric_at(PARAMS, q).norm(v)
        traj = simulate(PARAMS, JointState(q, v), None, 1e-3, duration, stride=100)
        worst = max(worst, float(np.max(np.abs(traj.total - traj.total[0])) / traj.total[0]))
    return worst <= tol, f"max relative energy drift = {worst:.2e}"


def free_geodesic_error(dt, T=1.0, ref_factor=100):
    s0 = JointState.of(0.3, -1.1, 1.5, -2.0)
    end = simulate(PARAMS, s0, None, dt, T, stride=int(round(T / dt))).final_state
    ref = simulate(PARAMS, s0, None, dt / ref_factor, T, stride=int(round(T * ref_factor / dt))).final_state
    return float(np.max(np.abs(np.concatenate([end.q - ref.q, end.v - ref.v]))))


def observed_order(dt=0.02):
    return math.log2(free_geodesic_error(dt) / free_geodesic_error(dt / 2))


def check_rk4_order(quick):
    order = observed_order()
    return 3.7 <= order <= 4.3, f"observed order {order:.3f}"


def check_time_reversibility(quick, tol=1e-6):
    s0 = JointState.of(0.4, 2.0, 1.2, -0.7)
    T = 2.0 if quick else 10.0
    fwd = simulate(PARAMS, s0, None, 1e-3, T, stride=1000).final_state
    back = simulate(PARAMS, JointState(fwd.q, -fwd.v), None, 1e-3, T, stride=1000).final_state
    err = float(max(np.max(np.abs(back.q - s0.q)), np.max(np.abs(-back.v - s0.v))))
    return err <= tol, f"round-trip error {err:.2e}"


def check_energy_theorem_builtins(quick, tol=1e-5):
    worst, which = 0.0, ""
    for name in builtin_names():
        sc = dataclasses.replace(load_scenario(name), dt=1e-4, duration=0.5 if quick else 1.0, stride=1)
        res = energy_rate_residual(run(sc)[0], order=4)
        if res >= worst:
            worst, which = res, name
    return worst <= tol, f"max residual {worst:.2e} ({which})"


# -- control --------------------------------------------------------------------

def check_equilibrium_characterization(quick):
    rng = _rng()
    bad = 0
    n = 100 if quick else 500
    for _ in range(n):
        x_d = rng.uniform(-0.7, 0.7, 2)
        if not 0.05 < np.linalg.norm(x_d) < 0.75:
            continue
        for elbow in (1, -1):
            q = inverse_kinematics(PARAMS, x_d, elbow)
            if singularity_margin(PARAMS, q) < 0.05:
                continue
            if np.linalg.norm(ctl.grad_lasalle(PARAMS, q, x_d, 1.0)) > 1e-10:
                bad += 1
        q = rng.uniform(-math.pi, math.pi, 2)
        if singularity_margin(PARAMS, q) >= 0.05:
            err = np.linalg.norm(tool_position(PARAMS, q) - x_d)
            gnorm = np.linalg.norm(ctl.grad_lasalle(PARAMS, q, x_d, 1.0))
            if (gnorm <= 1e-10) != (err <= 1e-10):
                bad += 1
    return bad == 0, f"{bad} violations"


def check_regulator_energy_decrease(quick, tol=1e-5):
    sc = dataclasses.replace(load_scenario("paper-sim-1"), dt=1e-4, duration=0.5 if quick else 1.0, stride=1)
    traj, _ = run(sc)
    L = lasalle_energy(traj, sc)
    h = traj.t[1] - traj.t[0]
    dL = (L[:-4] - 8 * L[1:-3] + 8 * L[3:-1] - L[4:]) / (12 * h)
    dissipation = -sc.k * 2.0 * traj.kinetic[2:-2]
    res = float(np.max(np.abs(dL - dissipation)))
    return res <= tol, f"max |dL/dt + k|v|^2| = {res:.2e}"


def _normal_only_runs(n, duration, scale=1.0, tangential=None):
    rng = _rng()
    c = REFERENCE_ELLIPSE
    worst = []
    for _ in range(n):
        s = random_constrained_state(PARAMS, c, rng)
        traj = simulate(PARAMS, s, ctl.make_normal_only(PARAMS, c, lambda_scale=scale, tangential=tangential),
                        1e-3, duration, stride=10, psi_fn=lambda q: ctl.psi(PARAMS, q, c))
        worst.append(float(np.max(np.abs(traj.psi))))
    return worst


def check_constraint_invariance(quick, tol=1e-6):
    def push(q, v, t):
        return np.array([math.sin(3 * t), math.cos(q[0])])

    worst = max(_normal_only_runs(2 if quick else 5, 2.0 if quick else 10.0, tangential=push))
    return worst <= tol, f"max |Psi| with tangential forcing = {worst:.2e}"


def check_normal_force_uniqueness(quick):
    n, T = (2, 2.0) if quick else (5, 10.0)
    base = _normal_only_runs(n, T)
    perturbed = _normal_only_runs(n, T, scale=1.0 + 1e-3)
    ratio = min(p / max(b, 1e-300) for p, b in zip(perturbed, base))
    return ratio >= 10.0, f"min growth of max |Psi| under 1e-3 lambda perturbation = {ratio:.3g}x"


def check_recomposition_orthogonality(quick):
    rng = _rng()
    c = REFERENCE_ELLIPSE
    gains = ctl.Gains(40.0, 30.0, 0.0, 0.0)
    worst_rec = worst_orth = 0.0
    for _ in range(50 if quick else 200):
        s = random_constrained_state(PARAMS, c, rng)
        x_d = rng.uniform(-0.5, 0.5, 2)
        out = ctl.constrained_regulator(PARAMS, s, x_d, gains, c)
        n = ctl.grad_psi(PARAMS, s.q, c)
        G = metric_at(PARAMS, s.q)
        worst_rec = max(worst_rec, float(np.max(np.abs(out.u - (out.lam * n + out.tangential)))))
        scale = G.norm(out.tangential) * G.norm(n)
        if scale > 0:
            worst_orth = max(worst_orth, abs(G.inner(out.tangential, n)) / scale)
    ok = worst_rec <= 1e-12 and worst_orth <= 1e-10
    return ok, f"recomposition {worst_rec:.2e}, relative orthogonality {worst_orth:.2e}"


# -- harness --------------------------------------------------------------------

def check_builtin_contracts(quick):
    failed = []
    for name in builtin_names():
        _, metrics = run(load_scenario(name))
        if not metrics.passed:
            failed.append(name)
    return not failed, ("all contracts met" if not failed else "failed: " + ", ".join(failed))


def check_determinism(quick):
    sc = dataclasses.replace(load_scenario("paper-sim-1"), duration=0.5 if quick else 2.0)
    with tempfile.TemporaryDirectory() as tmp:
        paths = [f"{tmp}/a.csv", f"{tmp}/b.csv"]
        for path in paths:
            write_csv(run(sc)[0], path)
        same = filecmp.cmp(*paths, shallow=False)
    return same, "exports identical" if same else "exports differ"


CHECKS: List[Tuple[str, Check]] = [
    ("geometry.positive_definite", check_positive_definite),
    ("geometry.christoffel_oracle", check_christoffel_oracle),
    ("geometry.christoffel_symmetry", check_christoffel_symmetry),
    ("geometry.metric_compatibility", check_metric_compatibility),
    ("geometry.sharp_flat_inverse", check_sharp_flat),
    ("kinematics.periodicity", check_periodicity),
    ("kinematics.jacobian_determinant", check_jacobian_determinant),
    ("kinematics.workspace", check_workspace),
    ("kinematics.singular_set", check_singular_set),
    ("dynamics.free_energy_conservation", check_free_energy_conservation),
    ("dynamics.rk4_order", check_rk4_order),
    ("dynamics.time_reversibility", check_time_reversibility),
    ("dynamics.energy_theorem_builtins", check_energy_theorem_builtins),
    ("control.equilibrium_characterization", check_equilibrium_characterization),
    ("control.regulator_energy_decrease", check_regulator_energy_decrease),
    ("control.constraint_invariance", check_constraint_invariance),
    ("control.normal_force_uniqueness", check_normal_force_uniqueness),
    ("control.recomposition_orthogonality", check_recomposition_orthogonality),
    ("harness.builtin_contracts", check_builtin_contracts),
    ("harness.determinism", check_determinism),
]


def run_checks(checks=None, quick=False, out=print):
    """Run ``checks`` (default :data:`CHECKS`); returns the names that failed."""
    failed = []
    for name, check in (CHECKS if checks is None else checks):
        start = time.perf_counter()
        try:
            ok, detail = check(quick)
        except Exception as exc:  # a crashing check counts as a failure
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out(f"{'PASS' if ok else 'FAIL'}  {name:40s} {detail}  [{time.perf_counter() - start:.1f}s]")
        if not ok:
            failed.append(name)
    return failed
