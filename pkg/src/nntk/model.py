"""Scaled single-hidden-layer network.

    f(x) = N**-beta * sum_i c_i * sigma(w_i . x + eta_i)

Per-neuron parameters are laid out as ``(c, w_1..w_d, eta)``; feature rows
and curvature blocks use the same ordering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .linalg import SymMatrix


class Activation(enum.Enum):
    TANH = "tanh"
    SIGMOID = "sigmoid"

    @classmethod
    def parse(cls, value) -> Activation:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown activation {value!r}") from None

    def sigma(self, z):
        if self is Activation.TANH:
            return np.tanh(z)
        return 0.5 * (1.0 + np.tanh(0.5 * z))

    def dsigma(self, z):
        if self is Activation.TANH:
            t = np.tanh(z)
            return 1.0 - t * t
        s = 0.5 * (1.0 + np.tanh(0.5 * z))
        return s * (1.0 - s)

    def d2sigma(self, z):
        if self is Activation.TANH:
            t = np.tanh(z)
            return -2.0 * t * (1.0 - t * t)
        s = 0.5 * (1.0 + np.tanh(0.5 * z))
        return s * (1.0 - s) * (1.0 - 2.0 * s)


@dataclass(frozen=True)
class InitDistribution:
    """Product initialization law: c ~ U(-a, a), (w, eta) ~ N(0, std**2 I)."""

    c_halfwidth: float = 1.0
    w_eta_std: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.c_halfwidth) and self.c_halfwidth >= 0):
            raise InputError(f"c_halfwidth must be >= 0, got {self.c_halfwidth}")
        if not (np.isfinite(self.w_eta_std) and self.w_eta_std > 0):
            raise InputError(f"w_eta_std must be > 0, got {self.w_eta_std}")

    def draw(self, rng: np.random.Generator, n: int, d: int):
        """Draw ``n`` i.i.d. neurons; returns ``(c, w, eta)`` arrays."""
        c = rng.uniform(-self.c_halfwidth, self.c_halfwidth, size=n)
        we = rng.normal(0.0, self.w_eta_std, size=(n, d + 1))
        return c, we[:, :d], we[:, d]


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NetworkParams:
    c: np.ndarray
    w: np.ndarray
    eta: np.ndarray
    beta: float

    def __post_init__(self):
        c, w, eta = _readonly(self.c), _readonly(self.w), _readonly(self.eta)
        if c.ndim != 1 or c.size < 1:
            raise InputError("c must be a non-empty vector")
        if w.ndim != 2 or w.shape[0] != c.size or w.shape[1] < 1:
            raise InputError(f"w must have shape (N, d) with N={c.size}, got {w.shape}")
        if eta.shape != c.shape:
            raise InputError(f"eta must have shape {c.shape}, got {eta.shape}")
        if not (0.5 < self.beta < 1.0):
            raise InputError(f"beta must lie strictly inside (0.5, 1), got {self.beta}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(w)) and np.all(np.isfinite(eta))):
            raise InputError("parameters must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def N(self) -> int:
        return self.c.size

    @property
    def d(self) -> int:
        return self.w.shape[1]

    @property
    def scale(self) -> float:
        """The output normalization ``N**-beta``."""
        return float(self.N) ** -self.beta

    @property
    def theta(self) -> np.ndarray:
        """Parameters as an ``(N, d+2)`` array of per-neuron rows."""
        return np.column_stack([self.c, self.w, self.eta])

    @classmethod
    def from_theta(cls, theta, beta) -> NetworkParams:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.ndim != 2 or theta.shape[1] < 3:
            raise InputError(f"theta must have shape (N, d+2), got {theta.shape}")
        return cls(theta[:, 0], theta[:, 1:-1], theta[:, -1], beta)

    def flat(self) -> np.ndarray:
        return self.theta.reshape(-1)

    def updated(self, z_blocks, alpha: float) -> NetworkParams:
        return NetworkParams.from_theta(self.theta + alpha * np.asarray(z_blocks), self.beta)

    def preactivations(self, xs) -> np.ndarray:
        """``w_i . x_m + eta_i`` as an ``(N, M)`` array."""
        xs = _as_inputs(xs, self.d)
        return self.w @ xs.T + self.eta[:, None]


def _as_inputs(xs, d) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim == 1:
        xs = xs[:, None] if d == 1 and xs.size != 1 else xs.reshape(1, -1)
    if xs.ndim != 2 or xs.shape[1] != d:
        raise InputError(f"inputs must have dimension {d}, got shape {xs.shape}")
    if not np.all(np.isfinite(xs)):
        raise InputError("inputs must be finite")
    return xs


def _as_point(x, d) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != (d,):
        raise InputError(f"input must be a {d}-vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("input must be finite")
    return x


def _check_index(params, i):
    if not (0 <= i < params.N):
        raise InputError(f"neuron index {i} out of range for N={params.N}")


def sample_init(dist: InitDistribution, N: int, d: int, beta: float, seed: int) -> NetworkParams:
    """Draw ``N`` neurons from ``dist``; fully determined by ``seed``."""
    if N < 1 or d < 1:
        raise InputError(f"need N >= 1 and d >= 1, got N={N}, d={d}")
    rng = np.random.default_rng(seed)
    c, w, eta = dist.draw(rng, N, d)
    return NetworkParams(c, w, eta, beta)


def forward(params: NetworkParams, act: Activation, x) -> float:
    x = _as_point(x, params.d)
    z = params.w @ x + params.eta
    return params.scale * float(params.c @ act.sigma(z))


def forward_batch(params: NetworkParams, act: Activation, xs) -> np.ndarray:
    """Network outputs at every row of ``xs``."""
    z = params.preactivations(xs)
    return params.scale * (params.c @ act.sigma(z))


def feature_row(params: NetworkParams, act: Activation, i: int, x) -> np.ndarray:
    """Unscaled Jacobian row of neuron ``i``: ``(sigma, c sigma' x, c sigma')``."""
    _check_index(params, i)
    x = _as_point(x, params.d)
    z = params.w[i] @ x + params.eta[i]
    g = params.c[i] * act.dsigma(z)
    return np.concatenate([[act.sigma(z)], g * x, [g]])


def hess_block(params: NetworkParams, act: Activation, i: int, x) -> SymMatrix:
    """Unscaled Hessian of the network output w.r.t. neuron ``i``'s parameters."""
    _check_index(params, i)
    x = _as_point(x, params.d)
    z = params.w[i] @ x + params.eta[i]
    xt = np.append(x, 1.0)
    h = np.zeros((params.d + 2, params.d + 2))
    h[0, 1:] = act.dsigma(z) * xt
    h[1:, 0] = h[0, 1:]
    h[1:, 1:] = params.c[i] * act.d2sigma(z) * np.outer(xt, xt)
    return SymMatrix(h)


def features(params: NetworkParams, act: Activation, xs) -> np.ndarray:
    """All feature rows at once, shape ``(N, M, d+2)``."""
    xs = _as_inputs(xs, params.d)
    z = params.preactivations(xs)
    g = params.c[:, None] * act.dsigma(z)
    out = np.empty((params.N, xs.shape[0], params.d + 2))
    out[:, :, 0] = act.sigma(z)
    out[:, :, 1:-1] = g[:, :, None] * xs[None, :, :]
    out[:, :, -1] = g
    return out


def weighted_hess_blocks(params: NetworkParams, act: Activation, xs, weights) -> np.ndarray:
    """``sum_m weights[m] * h_i(x_m)`` for every neuron, shape ``(N, d+2, d+2)``.

    Built from the closed form of the blocks so that no ``(N, M, d+2, d+2)``
    intermediate is formed.
    """
    xs = _as_inputs(xs, params.d)
    weights = np.asarray(weights, dtype=np.float64)
    z = params.preactivations(xs)
    xt = np.column_stack([xs, np.ones(xs.shape[0])])
    first = (act.dsigma(z) * weights) @ xt
    second = np.einsum("nm,mi,mj->nij", act.d2sigma(z) * weights, xt, xt)
    out = np.zeros((params.N, params.d + 2, params.d + 2))
    out[:, 0, 1:] = first
    out[:, 1:, 0] = first
    out[:, 1:, 1:] = params.c[:, None, None] * second
    return out
