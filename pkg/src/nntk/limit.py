"""Deterministic infinite-width dynamics ``f_{k+1} = f_k + alpha K (y - f_k)``, ``f_0 = 0``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .linalg import SymMatrix, sym_eig


@dataclass(frozen=True, eq=False)
class LimitTrajectory:
    f_star: np.ndarray
    residual_norms: np.ndarray
    bound: np.ndarray

    @property
    def losses(self) -> np.ndarray:
        M = self.f_star.shape[1]
        return self.residual_norms**2 / (2 * M)


@dataclass(frozen=True)
class ConvergenceReport:
    lambda_min: float
    lambda_max: float
    alpha_interval: tuple
    rate: float
    alpha: float

    @property
    def admissible(self) -> bool:
        lo, hi = self.alpha_interval
        return lo < self.alpha < hi


def _matrix(kernel) -> np.ndarray:
    if isinstance(kernel, SymMatrix):
        return kernel.entries
    if hasattr(kernel, "mat"):
        return kernel.mat.entries
    return SymMatrix(kernel).entries


def limit_trajectory(kernel, y, alpha: float, K: int) -> LimitTrajectory:
    """Iterate the limit recursion ``K`` steps from ``f_0 = 0``.

    ``bound[k] = (1 - alpha * lambda_min)^k * |y|`` is the linear-rate
    envelope, meaningful when ``alpha`` is admissible.
    """
    B = _matrix(kernel)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != B.shape[0]:
        raise InputError(f"labels have length {y.size}, kernel has dim {B.shape[0]}")
    if K < 0:
        raise InputError(f"K must be >= 0, got {K}")
    f = np.zeros((K + 1, y.size))
    for k in range(K):
        f[k + 1] = f[k] + alpha * (B @ (y - f[k]))
    res = np.linalg.norm(y[None, :] - f, axis=1)
    lam_min = sym_eig(B)[0][0]
    bound = (1.0 - alpha * lam_min) ** np.arange(K + 1) * np.linalg.norm(y)
    return LimitTrajectory(f_star=f, residual_norms=res, bound=bound)


def convergence_report(kernel, alpha: float) -> ConvergenceReport:
    """Spectrum endpoints, admissible step interval ``(0, 2/(l_max + l_min))`` and linear rate."""
    lam = sym_eig(_matrix(kernel))[0]
    lo, hi = float(lam[0]), float(lam[-1])
    return ConvergenceReport(
        lambda_min=lo,
        lambda_max=hi,
        alpha_interval=(0.0, 2.0 / (hi + lo)),
        rate=1.0 - alpha * lo,
        alpha=float(alpha),
    )
