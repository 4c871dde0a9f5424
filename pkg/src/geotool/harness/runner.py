"""Run scenarios and summarise trajectories as convergence metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..control import (constrained_critical_points, init_on_constraint, lasalle_potential,
                       make_constrained_regulator, make_normal_only, make_tool_regulator, psi)
from ..dynamics import Trajectory, energy_rate_residual, kinetic_energy, simulate
from ..errors import GeotoolError, NonFinite
from ..kinematics import tool_position
from .scenario import Scenario


@dataclass
class RunMetrics:
    final_tool_error: Optional[float]
    final_speed: float
    settling_time: Optional[float]
    max_psi: Optional[float]
    min_singularity_margin: float
    energy_residual: Optional[float]
    singular_samples: int
    contract: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.contract.values())

    def as_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def build_controller(scenario: Scenario):
    params = scenario.params
    if scenario.controller == "free":
        return None
    if scenario.controller == "tool_regulator":
        return make_tool_regulator(params, scenario.x_d, scenario.gains, scenario.potential)
    if scenario.controller == "normal_only":
        return make_normal_only(params, scenario.constraint, scenario.eps1, scenario.lambda_scale,
                                eps2=scenario.eps2)
    return make_constrained_regulator(params, scenario.x_d, scenario.gains, scenario.constraint,
                                      scenario.lambda_scale)


def initial_state(scenario: Scenario):
    if scenario.project_initial:
        return init_on_constraint(scenario.params, scenario.initial.q, scenario.initial.v,
                                  scenario.constraint)
    return scenario.initial


def simulate_scenario(scenario: Scenario) -> Trajectory:
    params, c = scenario.params, scenario.constraint
    psi_fn = None if c is None else (lambda q: psi(params, q, c))
    return simulate(params, initial_state(scenario), build_controller(scenario), dt=scenario.dt,
                    duration=scenario.duration, stride=scenario.stride,
                    potential=scenario.potential, psi_fn=psi_fn)


def settling_time(t: np.ndarray, error: np.ndarray, tol: float) -> Optional[float]:
    """First sample time after which ``error`` stays below ``tol``."""
    outside = np.nonzero(~(error < tol))[0]
    if len(outside) == 0:
        return float(t[0])
    last = outside[-1]
    return None if last == len(t) - 1 else float(t[last + 1])


def lasalle_energy(traj: Trajectory, scenario: Scenario) -> np.ndarray:
    """``0.5 g(v, v) + V(q)`` per sample, for a regulator scenario."""
    V = np.array([lasalle_potential(scenario.params, q, scenario.x_d, scenario.k1) for q in traj.q])
    return traj.kinetic + V


def compute_metrics(traj: Trajectory, scenario: Scenario) -> RunMetrics:
    final = traj.final_state
    final_speed = math.sqrt(2.0 * kinetic_energy(scenario.params, final))

    tool_error = settle = None
    if scenario.x_d is not None:
        x_d = np.asarray(scenario.x_d)
        tool_error = float(np.linalg.norm(tool_position(scenario.params, final.q) - x_d))
        errors = np.linalg.norm(traj.tool - x_d, axis=1)
        settle = settling_time(traj.t, errors, scenario.settle_tol)
    max_psi = float(np.max(np.abs(traj.psi))) if traj.constrained else None
    residual = energy_rate_residual(traj) if len(traj) >= 3 else None

    contract = {}
    k = scenario.contract
    if k.max_tool_error is not None:
        contract["tool_error"] = tool_error is not None and tool_error < k.max_tool_error
    if k.max_speed is not None:
        contract["speed"] = final_speed < k.max_speed
    if k.max_psi is not None:
        contract["psi"] = max_psi is not None and max_psi < k.max_psi
    return RunMetrics(
        final_tool_error=tool_error, final_speed=final_speed, settling_time=settle,
        max_psi=max_psi, min_singularity_margin=float(np.min(traj.sing_margin)),
        energy_residual=residual, singular_samples=int(np.sum(traj.singular_flags)),
        contract=contract,
    )


def run(scenario: Scenario):
    """Simulate ``scenario``; returns ``(trajectory, metrics)``."""
    try:
        traj = simulate_scenario(scenario)
    except NonFinite as exc:
        raise NonFinite(f"scenario {scenario.name!r}: {exc}", time=exc.time) from exc
    except GeotoolError as exc:
        raise type(exc)(f"scenario {scenario.name!r}: {exc}") from exc
    return traj, compute_metrics(traj, scenario)


def critical_point_report(scenario: Scenario) -> list:
    """Spurious critical points of V on the constraint (constrained scenarios only)."""
    if scenario.constraint is None or scenario.x_d is None:
        return []
    return [cp for cp in constrained_critical_points(scenario.x_d, scenario.constraint)
            if not cp.is_target]
