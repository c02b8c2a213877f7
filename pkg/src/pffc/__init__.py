"""Phase-field fracture optimal control.

Space-time dG(0) phase-field fracture with a penalized irreversibility
constraint, and reduced Newton-CG for a boundary traction control with
adjoint, tangent and second-order adjoint sweeps.
"""

from .config import ConfigError, ExperimentConfig, load_config, preset
from .forms import WeakForms
from .forward import ConvergenceError, ForwardSolver, NewtonSettings, Trajectory, uniform_times
from .kernels import BACKEND as KERNEL_BACKEND
from .mesh import Mesh, build_mesh, interpolate_slit_field
from .model import CostParams, ModelParams, ParameterError
from .optimize import IterationRecord, OptSettings, ReducedProblem, newton_cg

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ConvergenceError", "CostParams", "ExperimentConfig", "ForwardSolver", "IterationRecord",
    "KERNEL_BACKEND", "Mesh", "ModelParams", "NewtonSettings", "OptSettings", "ParameterError",
    "ReducedProblem", "Trajectory", "WeakForms", "build_mesh", "interpolate_slit_field", "load_config",
    "newton_cg", "preset", "uniform_times",
]
