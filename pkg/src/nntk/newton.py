"""Regularized Newton steps and the training loop.

The production step never forms the ``N(d+2)``-dimensional system. With the
regularized block-diagonal part ``D`` positive definite, the push-through
identity gives

    zeta = (I + J D^-1 J^T / M)^-1 r,     z_i = D_i^-1 J_i^T zeta / M,

so one step costs ``N`` small block solves plus one ``M x M`` solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DefinitenessError, InputError
from .linalg import SymMatrix, solve_sym
from .model import Activation, NetworkParams, forward_batch
from .objective import Dataset, HessianParts, gradient, hessian_full, hessian_parts, residual_and_loss

PD_HINT = "increase gamma or N (need gamma >~ C / N**(1 - beta))"


@dataclass(frozen=True, eq=False)
class NewtonStepResult:
    z_blocks: np.ndarray
    zeta: np.ndarray
    kernel_A: SymMatrix
    min_block_eig: float
    residual: np.ndarray
    loss: float

    @property
    def z(self) -> np.ndarray:
        """The update as a flat ``N(d+2)`` vector."""
        return self.z_blocks.reshape(-1)

    @property
    def block_norms(self) -> np.ndarray:
        return np.linalg.norm(self.z_blocks, axis=1)

    @property
    def max_block_update(self) -> float:
        return float(self.block_norms.max())


@dataclass(eq=False)
class TrainTrajectory:
    outputs: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    max_block_updates: list = field(default_factory=list)
    min_block_eigs: list = field(default_factory=list)
    params: NetworkParams | None = None

    @property
    def K(self) -> int:
        return len(self.max_block_updates)


def default_epsilon(gamma: float) -> float:
    return 1e-12 * gamma


def pd_guard(parts: HessianParts, epsilon: float | None = None) -> float:
    """Smallest eigenvalue over all rescaled curvature blocks ``d_i``.

    Raises :class:`DefinitenessError` if it is not above ``epsilon``
    (default ``1e-12 * gamma``).
    """
    if epsilon is None:
        epsilon = default_epsilon(parts.gamma)
    lam = np.linalg.eigvalsh(parts.d_blocks)[:, 0]
    i = int(np.argmin(lam))
    lam_min = float(lam[i])
    if not lam_min > epsilon:
        raise DefinitenessError(
            f"curvature block of neuron {i} has eigenvalue {lam_min:.6g} <= {epsilon:.3g}; {PD_HINT}",
            neuron=i,
            eigenvalue=lam_min,
        )
    return lam_min


def block_solves(parts: HessianParts) -> np.ndarray:
    """``d_i^-1 s_i^T`` for every neuron, shape ``(N, d+2, M)``."""
    return np.linalg.solve(parts.d_blocks, parts.s.transpose(0, 2, 1))


def kernel_from(parts: HessianParts, solved: np.ndarray | None = None) -> SymMatrix:
    """``A = (1/MN) sum_i s_i d_i^-1 s_i^T``."""
    if solved is None:
        solved = block_solves(parts)
    N, M, _ = parts.s.shape
    return SymMatrix(np.einsum("nmp,npk->mk", parts.s, solved) / (M * N))


def newton_step_woodbury(
    params: NetworkParams,
    act: Activation,
    data: Dataset,
    gamma: float,
    alpha: float = 1.0,
    epsilon: float | None = None,
    gauss_newton: bool = False,
):
    """One regularized Newton step via the push-through identity.

    Returns ``(NewtonStepResult, params + alpha * z)``.
    """
    parts = hessian_parts(params, act, data, gamma, gauss_newton)
    lam_min = pd_guard(parts, epsilon)
    solved = block_solves(parts)
    A = kernel_from(parts, solved)
    M = data.M
    zeta = solve_sym(np.eye(M) + A.entries, parts.residual)
    z_blocks = float(params.N) ** (params.beta - 1) / M * np.einsum("npm,m->np", solved, zeta)
    r = parts.residual
    result = NewtonStepResult(
        z_blocks=z_blocks,
        zeta=zeta,
        kernel_A=A,
        min_block_eig=lam_min,
        residual=r,
        loss=float(r @ r) / (2 * M),
    )
    return result, params.updated(z_blocks, alpha)


def newton_step_direct(
    params: NetworkParams,
    act: Activation,
    data: Dataset,
    gamma: float,
    gauss_newton: bool = False,
) -> np.ndarray:
    """Dense solve of ``(gamma_N I + Hess L) z = -grad L``; oracle for small N."""
    H = hessian_full(params, act, data, gamma, gauss_newton)
    return solve_sym(H, -gradient(params, act, data))


def train(
    params0: NetworkParams,
    act: Activation,
    data: Dataset,
    gamma: float,
    alpha: float = 1.0,
    K: int = 1,
    epsilon: float | None = None,
    gauss_newton: bool = False,
) -> TrainTrajectory:
    """Run ``K`` regularized Newton steps from ``params0``.

    A definiteness failure at step ``k`` is re-raised with ``step=k``.
    """
    if not alpha > 0:
        raise InputError(f"alpha must be positive, got {alpha}")
    if K < 1:
        raise InputError(f"K must be >= 1, got {K}")
    traj = TrainTrajectory()
    params = params0
    for k in range(K):
        try:
            step, new_params = newton_step_woodbury(params, act, data, gamma, alpha, epsilon, gauss_newton)
        except DefinitenessError as exc:
            exc.step = k
            exc.args = (f"step {k}: {exc.args[0]}",)
            raise
        traj.outputs.append(forward_batch(params, act, data.xs))
        traj.losses.append(step.loss)
        traj.max_block_updates.append(step.max_block_update)
        traj.min_block_eigs.append(step.min_block_eig)
        params = new_params
    _, loss = residual_and_loss(params, act, data)
    traj.outputs.append(forward_batch(params, act, data.xs))
    traj.losses.append(loss)
    traj.params = params
    return traj
