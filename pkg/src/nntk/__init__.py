"""Regularized Newton training of scaled shallow networks and its tangent kernels."""

__version__ = "0.1.0"

from .errors import DefinitenessError, InputError, NNTKError, SizeGuardError, SolveError
from .kernels import (
    KernelKind,
    KernelMatrix,
    kernel_distance,
    nntk_finite,
    nntk_limit,
    ntk_empirical,
    ntk_limit_mc,
)
from .limit import LimitTrajectory, convergence_report, limit_trajectory
from .linalg import SymMatrix, op_norm_sym, solve_sym, sym_eig
from .model import (
    Activation,
    InitDistribution,
    NetworkParams,
    feature_row,
    forward,
    hess_block,
    sample_init,
)
from .newton import (
    NewtonStepResult,
    TrainTrajectory,
    newton_step_direct,
    newton_step_woodbury,
    pd_guard,
    train,
)
from .objective import Dataset, HessianParts, gradient, hessian_full, hessian_parts, residual_and_loss
