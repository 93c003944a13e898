"""Square loss, its gradient, and the structured Hessian.

The loss Hessian splits as ``G + S`` with ``G = J^T J / M`` (rank <= M) and
``S`` block-diagonal over neurons. Adding the shift ``gamma_N = gamma /
N**(2 beta - 1)`` to the diagonal gives the regularized Newton matrix; its
block-diagonal part ``D = gamma_N I + S`` is stored through the rescaled
``(d+2) x (d+2)`` blocks ``d_i = N**(2 beta - 1) * D_i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SizeGuardError
from .linalg import SymMatrix
from .model import Activation, NetworkParams, features, forward_batch, weighted_hess_blocks

MAX_DENSE_DIM = 512


@dataclass(frozen=True, eq=False)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.array(self.xs, dtype=np.float64, copy=True)
        ys = np.array(self.ys, dtype=np.float64, copy=True).reshape(-1)
        if xs.ndim == 1:
            xs = xs[:, None]
        if xs.ndim != 2 or xs.shape[0] != ys.size or ys.size < 1:
            raise InputError(f"need M inputs and M labels, got {xs.shape} and {ys.shape}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise InputError("dataset entries must be finite")
        if np.any(np.all(xs == 0.0, axis=1)):
            raise InputError("inputs must be nonzero")
        if np.unique(xs, axis=0).shape[0] != xs.shape[0]:
            raise InputError("inputs must be pairwise distinct")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def M(self) -> int:
        return self.ys.size

    @property
    def d(self) -> int:
        return self.xs.shape[1]


@dataclass(frozen=True, eq=False)
class HessianParts:
    """Structured pieces of the regularized Hessian at one parameter point.

    ``s`` holds the unscaled per-neuron feature rows, shape ``(N, M, d+2)``;
    the Jacobian is ``N**-beta * s``. ``d_blocks`` has shape
    ``(N, d+2, d+2)``.
    """

    s: np.ndarray
    d_blocks: np.ndarray
    residual: np.ndarray
    gamma: float
    N: int
    beta: float

    @property
    def gammaN(self) -> float:
        return self.gamma / float(self.N) ** (2 * self.beta - 1)

    @property
    def D_blocks(self) -> np.ndarray:
        """Blocks of ``D = gamma_N I + S`` (the unrescaled block-diagonal part)."""
        return self.d_blocks / float(self.N) ** (2 * self.beta - 1)

    def jacobian(self) -> np.ndarray:
        """Dense ``M x N(d+2)`` Jacobian."""
        N, M, p = self.s.shape
        return float(N) ** -self.beta * self.s.transpose(1, 0, 2).reshape(M, N * p)


def _check(params: NetworkParams, data: Dataset):
    if data.d != params.d:
        raise InputError(f"dataset has d={data.d}, network has d={params.d}")


def residual_and_loss(params: NetworkParams, act: Activation, data: Dataset):
    """Residual ``y - f(x)`` and loss ``|r|^2 / (2M)``."""
    _check(params, data)
    r = data.ys - forward_batch(params, act, data.xs)
    return r, float(r @ r) / (2 * data.M)


def _gradient_from(s, r, scale, M):
    return -(scale / M) * np.einsum("nmp,m->np", s, r)


def gradient(params: NetworkParams, act: Activation, data: Dataset) -> np.ndarray:
    """Loss gradient as a flat ``N(d+2)`` vector in per-neuron order."""
    r, _ = residual_and_loss(params, act, data)
    s = features(params, act, data.xs)
    return _gradient_from(s, r, params.scale, data.M).reshape(-1)


def hessian_parts(
    params: NetworkParams,
    act: Activation,
    data: Dataset,
    gamma: float,
    gauss_newton: bool = False,
) -> HessianParts:
    """Feature rows and regularized curvature blocks at ``params``.

    ``d_i = gamma I - N**(beta-1) / M * sum_m r_m h_i(x_m)``. With
    ``gauss_newton=True`` the residual curvature is dropped (``S := 0``).
    """
    if not (np.isfinite(gamma) and gamma >= 0):
        raise InputError(f"gamma must be >= 0, got {gamma}")
    r, _ = residual_and_loss(params, act, data)
    s = features(params, act, data.xs)
    p = params.d + 2
    blocks = np.broadcast_to(gamma * np.eye(p), (params.N, p, p)).copy()
    if not gauss_newton:
        weight = float(params.N) ** (params.beta - 1) / data.M
        blocks -= weight * weighted_hess_blocks(params, act, data.xs, r)
    blocks = 0.5 * (blocks + blocks.transpose(0, 2, 1))
    return HessianParts(s=s, d_blocks=blocks, residual=r, gamma=float(gamma), N=params.N, beta=params.beta)


def hessian_full(
    params: NetworkParams,
    act: Activation,
    data: Dataset,
    gamma: float,
    gauss_newton: bool = False,
) -> SymMatrix:
    """Dense ``gamma_N I + G + S``; small-instance oracle only."""
    n = params.N * (params.d + 2)
    if n > MAX_DENSE_DIM:
        raise SizeGuardError(f"refusing dense Hessian of dim {n} > {MAX_DENSE_DIM}")
    parts = hessian_parts(params, act, data, gamma, gauss_newton)
    J = parts.jacobian()
    H = J.T @ J / data.M
    p = params.d + 2
    D = parts.D_blocks
    for i in range(params.N):
        H[i * p:(i + 1) * p, i * p:(i + 1) * p] += D[i]
    return SymMatrix(H)
