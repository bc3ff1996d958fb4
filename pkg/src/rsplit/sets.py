"""Closed convex sets with exact projectors."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import as_matrix, as_vector


class ConvexSet:
    """Base class: subclasses implement :meth:`project`."""

    name = "set"

    def project(self, x):
        raise NotImplementedError

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - self.project(x)) <= tol)

    def _check(self, x, dim):
        x = np.asarray(x, dtype=float)
        if x.shape != (dim,):
            raise DimensionError(f"{self.name}: point of shape {x.shape}, expected ({dim},)")
        return x


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """``{x : <a, x> <= b}``."""

    a: np.ndarray
    b: float
    name = "halfspace"

    def __post_init__(self):
        a = as_vector(self.a, name="normal")
        if not np.any(a):
            raise ParameterError("halfspace normal must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "_aa", float(a @ a))

    @property
    def dim(self):
        return self.a.size

    def project(self, x):
        x = self._check(x, self.dim)
        excess = self.a @ x - self.b
        if excess <= 0.0:
            return x.copy()
        return x - (excess / self._aa) * self.a


@dataclass(frozen=True, eq=False)
class Hyperplane(ConvexSet):
    """``{x : <a, x> = b}``."""

    a: np.ndarray
    b: float
    name = "hyperplane"

    def __post_init__(self):
        a = as_vector(self.a, name="normal")
        if not np.any(a):
            raise ParameterError("hyperplane normal must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "_aa", float(a @ a))

    @property
    def dim(self):
        return self.a.size

    def project(self, x):
        x = self._check(x, self.dim)
        return x - ((self.a @ x - self.b) / self._aa) * self.a


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Closed Euclidean ball."""

    center: np.ndarray
    radius: float
    name = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, name="center"))
        radius = float(self.radius)
        if not radius >= 0.0:
            raise ParameterError(f"ball radius must be nonnegative, got {radius}")
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self):
        return self.center.size

    def project(self, x):
        x = self._check(x, self.dim)
        d = x - self.center
        dist = np.linalg.norm(d)
        if dist <= self.radius:
            return x.copy()
        return self.center + (self.radius / dist) * d


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray
    name = "box"

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, dim=lo.size, name="upper")
        if np.any(lo > hi):
            raise ParameterError("box needs lower <= upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return self.lower.size

    def project(self, x):
        x = self._check(x, self.dim)
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class AffineSubspace(ConvexSet):
    """Solution set ``{x : G x = h}`` of a consistent linear system."""

    G: np.ndarray
    h: np.ndarray
    name = "affine_subspace"
    _pinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        G = as_matrix(self.G, name="matrix")
        h = as_vector(self.h, dim=G.shape[0], name="rhs")
        pinv = np.linalg.pinv(G)
        particular = pinv @ h
        if np.linalg.norm(G @ particular - h) > 1e-9 * (1.0 + np.linalg.norm(h)):
            raise ParameterError("affine subspace is empty: G x = h is inconsistent")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "_pinv", pinv)

    @property
    def dim(self):
        return self.G.shape[1]

    def project(self, x):
        x = self._check(x, self.dim)
        return x - self._pinv @ (self.G @ x - self.h)


def project_set(C, x):
    """Nearest point of `C` to `x`."""
    return C.project(as_vector(x))
