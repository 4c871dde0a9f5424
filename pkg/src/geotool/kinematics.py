"""Tool map of the planar two-link arm, its Jacobian and singular set."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import RobotParams

#: Default tolerance (m) for classifying a point as on the workspace boundary.
BOUNDARY_TOL = 1e-9


def _tool(params: RobotParams, t1: float, t2: float):
    return (params.l1 * math.cos(t1) + params.l2 * math.cos(t2),
            params.l1 * math.sin(t1) + params.l2 * math.sin(t2))


def tool_position(params: RobotParams, q) -> np.ndarray:
    """End-point position ``x(q)`` in the fixed plane, shape ``(2,)``."""
    return np.array(_tool(params, float(q[0]), float(q[1])))


@dataclass(frozen=True)
class ToolJacobian:
    """Jacobian of the tool map; column ``j`` is dx/dtheta_j."""

    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def pullback(self, p) -> np.ndarray:
        """Transpose action: a workspace covector pulled back to the chart."""
        return np.array([self.a11 * p[0] + self.a21 * p[1], self.a12 * p[0] + self.a22 * p[1]])

    def apply(self, v) -> np.ndarray:
        return np.array([self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]])


def tool_jacobian(params: RobotParams, q) -> ToolJacobian:
    t1, t2 = float(q[0]), float(q[1])
    return ToolJacobian(-params.l1 * math.sin(t1), -params.l2 * math.sin(t2),
                        params.l1 * math.cos(t1), params.l2 * math.cos(t2))


def singularity_margin(params: RobotParams, q) -> float:
    """``|det Dx| = l1 l2 |sin(theta2 - theta1)|``; zero exactly on singular points."""
    return params.l1 * params.l2 * abs(math.sin(float(q[1]) - float(q[0])))


class Region(str, enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def workspace_radii(params: RobotParams):
    """Inner and outer radius of the reachable annulus."""
    return abs(params.l1 - params.l2), params.l1 + params.l2


def workspace_contains(params: RobotParams, p, tol: float = BOUNDARY_TOL) -> Region:
    """Classify a workspace point against the annulus of reachable positions."""
    r = math.hypot(float(p[0]), float(p[1]))
    inner, outer = workspace_radii(params)
    if abs(r - inner) <= tol or abs(r - outer) <= tol:
        return Region.BOUNDARY
    if inner < r < outer:
        return Region.INSIDE
    return Region.OUTSIDE


def singularity_map(params: RobotParams, grid_n: int):
    """Sample the singularity margin on a ``grid_n x grid_n`` grid over [-pi, pi]^2.

    Returns ``(angles, margins)`` where ``margins[i, j]`` is the margin at
    ``(angles[i], angles[j])``.
    """
    if int(grid_n) != grid_n or grid_n < 2:
        raise ValueError("grid_n must be an integer >= 2")
    angles = np.linspace(-math.pi, math.pi, int(grid_n))
    t1, t2 = np.meshgrid(angles, angles, indexing="ij")
    return angles, params.l1 * params.l2 * np.abs(np.sin(t2 - t1))
