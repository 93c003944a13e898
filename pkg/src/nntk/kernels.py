"""Tangent kernels on the training inputs.

Four ``M x M`` kernels appear:

* ``finite_ntk``: the empirical gradient-descent NTK ``(1/MN) sum_i s_i s_i^T``;
* ``finite_nntk``: the Newton kernel ``A (I + A)^-1`` of a finite network,
  ``A = (1/MN) sum_i s_i d_i^-1 s_i^T``;
* ``limit_ntk_mc``: a Monte Carlo estimate of the infinite-width NTK
  ``B = (1/M) E[sigma sigma' + c^2 sigma' sigma'^T (x x^T + 1)]`` under the
  initialization law;
* ``limit_nntk``: ``B (gamma I + B)^-1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DefinitenessError, InputError
from .linalg import SymMatrix, op_norm_sym, solve_sym, sym_eig
from .model import Activation, InitDistribution, NetworkParams, features
from .newton import kernel_from, pd_guard
from .objective import Dataset, hessian_parts

MC_CHUNK = 1 << 14


class KernelKind(enum.Enum):
    FINITE_NNTK = "finite_nntk"
    FINITE_NTK = "finite_ntk"
    LIMIT_NTK_MC = "limit_ntk_mc"
    LIMIT_NNTK = "limit_nntk"


_PSD_KINDS = (KernelKind.FINITE_NTK, KernelKind.LIMIT_NTK_MC)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    mat: SymMatrix
    kind: KernelKind
    meta: dict = field(default_factory=dict)
    stderr: np.ndarray | None = None

    def __post_init__(self):
        if not isinstance(self.mat, SymMatrix):
            object.__setattr__(self, "mat", SymMatrix(self.mat))
        a = self.mat.entries
        if not np.all(np.isfinite(a)):
            raise InputError("kernel entries must be finite")
        if self.kind in _PSD_KINDS:
            lam = np.linalg.eigvalsh(a)
            if lam[0] < -1e-10 * max(float(np.abs(lam).max()), np.finfo(float).tiny):
                raise DefinitenessError(f"{self.kind.value} kernel is not PSD (min eigenvalue {lam[0]:.3e})")

    @property
    def M(self) -> int:
        return self.mat.dim

    @property
    def entries(self) -> np.ndarray:
        return self.mat.entries

    def eigvals(self) -> np.ndarray:
        return sym_eig(self.mat)[0]


def nntk_finite(
    params: NetworkParams,
    act: Activation,
    data: Dataset,
    gamma: float,
    epsilon: float | None = None,
    gauss_newton: bool = False,
) -> KernelMatrix:
    """Newton kernel ``A (I + A)^-1`` of the finite network at ``params``."""
    parts = hessian_parts(params, act, data, gamma, gauss_newton)
    pd_guard(parts, epsilon)
    A = kernel_from(parts).entries
    B = solve_sym(np.eye(data.M) + A, A)
    return KernelMatrix(SymMatrix(B), KernelKind.FINITE_NNTK, {"gamma": float(gamma), "N": params.N})


def ntk_empirical(params: NetworkParams, act: Activation, data: Dataset) -> KernelMatrix:
    s = features(params, act, data.xs)
    K = np.einsum("nmp,nkp->mk", s, s) / (data.M * params.N)
    return KernelMatrix(SymMatrix(K), KernelKind.FINITE_NTK, {"N": params.N})


def _mc_chunks(dist: InitDistribution, act: Activation, data: Dataset, samples: int, seed: int):
    """Yield ``(sig, g)`` per chunk: ``sigma(w.x+eta)`` and ``c sigma'(w.x+eta)``.

    Chunk ``j`` draws from its own stream spawned off ``seed``; chunk sizes
    are fixed so results do not depend on how chunks are scheduled.
    """
    n_chunks = math.ceil(samples / MC_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    for j, ss in enumerate(streams):
        size = min(MC_CHUNK, samples - j * MC_CHUNK)
        c, w, eta = dist.draw(np.random.default_rng(ss), size, data.d)
        z = w @ data.xs.T + eta[:, None]
        yield act.sigma(z), c[:, None] * act.dsigma(z)


def ntk_limit_mc(
    dist: InitDistribution,
    act: Activation,
    data: Dataset,
    samples: int = 200_000,
    seed: int = 0,
) -> KernelMatrix:
    """Monte Carlo estimate of the infinite-width NTK with entrywise standard errors."""
    if samples < 1:
        raise InputError(f"samples must be >= 1, got {samples}")
    M = data.M
    X = data.xs @ data.xs.T + 1.0
    total = np.zeros((M, M))
    total_sq = np.zeros((M, M))
    for sig, g in _mc_chunks(dist, act, data, samples, seed):
        sig2, g2 = sig * sig, g * g
        total += sig.T @ sig + (g.T @ g) * X
        total_sq += sig2.T @ sig2 + 2.0 * ((sig * g).T @ (sig * g)) * X + (g2.T @ g2) * X * X
    mean = total / samples
    if samples > 1:
        var = np.maximum(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
        stderr = np.sqrt(var / samples) / M
    else:
        stderr = np.full((M, M), np.inf)
    meta = {"samples": int(samples), "seed": int(seed),
            "c_halfwidth": dist.c_halfwidth, "w_eta_std": dist.w_eta_std}
    return KernelMatrix(SymMatrix(mean / M), KernelKind.LIMIT_NTK_MC, meta, stderr)


def quadratic_form_stderr(
    dist: InitDistribution,
    act: Activation,
    data: Dataset,
    vectors: np.ndarray,
    samples: int = 200_000,
    seed: int = 0,
) -> np.ndarray:
    """Monte Carlo standard error of ``v^T B v`` for each column ``v`` of ``vectors``.

    Replays the exact sample stream of :func:`ntk_limit_mc` with the same
    ``(samples, seed)``. With ``v`` an eigenvector of the estimate this is
    the first-order standard error of the matching eigenvalue.
    """
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    M = data.M
    s1 = np.zeros(V.shape[1])
    s2 = np.zeros(V.shape[1])
    for sig, g in _mc_chunks(dist, act, data, samples, seed):
        gv = g[:, :, None] * V[None, :, :]
        xg = np.einsum("smk,md->skd", gv, data.xs)
        q = (sig @ V) ** 2 + np.sum(xg * xg, axis=2) + gv.sum(axis=1) ** 2
        q /= M
        s1 += q.sum(axis=0)
        s2 += (q * q).sum(axis=0)
    if samples < 2:
        return np.full(V.shape[1], np.inf)
    mean = s1 / samples
    var = np.maximum(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
    return np.sqrt(var / samples)


def eigenvalue_map(lam, gamma: float) -> np.ndarray:
    """``lambda / (gamma + lambda)``."""
    lam = np.asarray(lam, dtype=np.float64)
    return lam / (gamma + lam)


def nntk_limit(B: KernelMatrix, gamma: float) -> KernelMatrix:
    """Limit Newton kernel ``B (gamma I + B)^-1``, formed in the eigenbasis of ``B``."""
    if B.kind is not KernelKind.LIMIT_NTK_MC:
        raise InputError(f"expected a limit_ntk_mc kernel, got {B.kind.value}")
    if not (np.isfinite(gamma) and gamma >= 0):
        raise InputError(f"gamma must be >= 0, got {gamma}")
    lam, V = sym_eig(B.mat)
    if gamma == 0 and lam[0] <= 1e-12:
        raise DefinitenessError(
            f"gamma = 0 needs a nonsingular NTK, min eigenvalue is {lam[0]:.3e}", eigenvalue=float(lam[0])
        )
    mapped = eigenvalue_map(lam, gamma)
    meta = dict(B.meta, gamma=float(gamma))
    return KernelMatrix(SymMatrix((V * mapped) @ V.T), KernelKind.LIMIT_NNTK, meta)


def kernel_distance(A: KernelMatrix, B: KernelMatrix) -> float:
    """Operator-norm distance between two kernels."""
    if A.M != B.M:
        raise InputError(f"kernel dimensions differ: {A.M} vs {B.M}")
    return op_norm_sym(A.mat - B.mat)
