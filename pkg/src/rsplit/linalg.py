"""Dense real vector helpers.

Vectors are plain 1-D ``float64`` numpy arrays. Functions here validate
shapes and finiteness at the boundary so the iterative code can stay lean.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import DimensionError, NotPositiveDefiniteError


def as_vector(x, dim=None, name="vector"):
    """Return `x` as a finite 1-D float array (always a fresh copy)."""
    v = np.array(x, dtype=float, copy=True)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"{name} must be a nonempty 1-D array, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise DimensionError(f"{name} has dimension {v.size}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_matrix(M, shape=None, name="matrix"):
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    if shape is not None and A.shape != tuple(shape):
        raise DimensionError(f"{name} has shape {A.shape}, expected {tuple(shape)}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def inner(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.dot(x, y))


def norm(x):
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


def solve_spd(M, b):
    """Solve ``M x = b`` for symmetric positive definite `M` by Cholesky.

    Raises
    ------
    NotPositiveDefiniteError
        If `M` is not symmetric or the factorization breaks down.
    """
    M = as_matrix(M)
    b = as_vector(b, name="rhs")
    n = b.size
    if M.shape != (n, n):
        raise DimensionError(f"matrix shape {M.shape} incompatible with rhs of size {n}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * scale):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        factor = sla.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from None
    return sla.cho_solve(factor, b, check_finite=False)


@dataclass(frozen=True)
class AffineMap:
    """``x -> scale * x + shift``."""

    scale: float
    shift: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "shift", as_vector(self.shift, name="shift"))

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != self.shift.shape:
            raise DimensionError(f"dimension mismatch: {x.shape} vs {self.shift.shape}")
        if self.scale == 0.0:
            return self.shift.copy()
        return self.scale * x + self.shift

    __call__ = apply
