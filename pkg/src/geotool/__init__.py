"""Riemannian dynamics and geometric tool control of a planar two-link arm."""

from .control import (ControlOutput, EllipseConstraint, Gains, constrained_regulator,
                      grad_lasalle, grad_psi, init_on_constraint, lambda_normal,
                      lasalle_potential, project_tangent, psi, tool_regulator)
from .dynamics import (EnergyReport, JointState, PotentialSpec, Trajectory, energy_rate_residual,
                       forced_acceleration, kinetic_energy, rk4_step, simulate)
from .errors import (DegenerateMetric, GeotoolError, NoConvergence, NonFinite, ParseError,
                     SingularGradient, ValidationError)
from .geometry import (Christoffel, MetricTensor, RobotParams, christoffel_closed_form,
                       christoffel_oracle, covariant_derivative_along, flat, gradient, metric_at,
                       sharp, wrap)
from .kinematics import (Region, ToolJacobian, singularity_map, singularity_margin, tool_jacobian,
                         tool_position, workspace_contains)

__version__ = "0.1.0"
