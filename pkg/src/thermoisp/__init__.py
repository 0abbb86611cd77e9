"""Reconstruction of space-dependent sources in 1D type-III thermoelasticity."""

from .adjoint import AdjointSolution, AdjointSpec, solve_adjoint
from .experiments import RunConfig, build_case, nondimensional_epsilon, run_reconstruction, run_sweep
from .forward import (
    ForwardSolution,
    InitialData,
    MaterialParams,
    ProblemSpec,
    Separable,
    assemble_step_system,
    solve_forward,
    solve_sensitivity,
)
from .gradients import (
    CostConfig,
    SobolevWeights,
    assemble_elliptic,
    cost,
    grad_l2,
    grad_sobolev,
    optimal_step,
)
from .grid import (
    SpaceGrid,
    TimeGrid,
    inner_l2,
    norm_l2,
    project_fine_to_working,
    simpson_time_integral,
)
from .kernel import Kernel, conv_adjoint, conv_forward, kernel_eval
from .measurements import (
    Measurement,
    MeasurementKind,
    add_noise,
    apply_measurement,
    compute_remainder,
)
from .reconstruction import (
    GradientKind,
    Method,
    ReconstructionConfig,
    ReconstructionResult,
    conjugate_gradient,
    landweber,
    landweber_threshold,
    morozov_stop,
    operator_norm_estimate,
    steepest_descent,
)

__version__ = "0.1.0"
