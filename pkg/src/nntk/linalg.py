"""Small dense symmetric linear algebra.

Everything here is thin over ``numpy.linalg`` (LAPACK ``syevd``/``gesv``);
the matrices involved are at most a few hundred rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SolveError


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Real symmetric matrix, symmetrized once at construction."""

    entries: np.ndarray

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise InputError(f"expected a non-empty square matrix, got shape {a.shape}")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __sub__(self, other: SymMatrix) -> SymMatrix:
        return SymMatrix(self.entries - other.entries)

    def __matmul__(self, other):
        return self.entries @ np.asarray(other)


def _as_array(A) -> np.ndarray:
    a = A.entries if isinstance(A, SymMatrix) else np.asarray(A, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    return a


def sym_eig(A):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of ``A``."""
    return np.linalg.eigh(_as_array(A))


def eigvalsh(A) -> np.ndarray:
    return np.linalg.eigvalsh(_as_array(A))


def op_norm_sym(A) -> float:
    """Spectral norm of a symmetric matrix, i.e. ``max |lambda_i|``."""
    lam = eigvalsh(A)
    return float(np.max(np.abs(lam)))


def solve_sym(A, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric nonsingular ``A``.

    Raises :class:`SolveError` with the smallest eigenvalue magnitude when
    ``A`` is singular to working precision.
    """
    a = _as_array(A)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != a.shape[0]:
        raise InputError(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    lam = np.abs(np.linalg.eigvalsh(a))
    smallest = float(lam.min())
    if smallest <= a.shape[0] * np.finfo(np.float64).eps * float(lam.max()):
        raise SolveError(
            f"matrix is singular to working precision (smallest |eigenvalue| {smallest:.3e})",
            smallest=smallest,
        )
    return np.linalg.solve(a, b)
