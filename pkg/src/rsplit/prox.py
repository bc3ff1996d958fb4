"""Proximity operators of weakly convex functions and of their sums.

A function ``f`` is alpha-convex when ``f - (alpha/2)||.||^2`` is convex.
For ``1 + gamma*alpha > 0`` its prox

    Prox_{gamma f}(x) = argmin_z f(z) + ||z - x||^2 / (2 gamma)

is single-valued and coincides with the resolvent of ``gamma`` times the
Frechet subdifferential, so sums of such functions can be handled by the
splitting engine with ``A = subdifferential_of(f)``.

``value_eval`` callables in this module act on the last axis, so they can
be evaluated on whole grids at once.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import engine
from .errors import DomainError, InfeasibleError, ParameterError
from .linalg import as_matrix, as_vector, solve_spd
from .operators import subdifferential_of


@dataclass(frozen=True)
class ProxFunction:
    prox_eval: Optional[Callable]
    modulus: float
    value_eval: Optional[Callable] = None
    subgradient_eval: Optional[Callable] = None
    gradient_lipschitz: Optional[float] = None
    name: str = "f"

    def __call__(self, x):
        if self.value_eval is None:
            raise DomainError(f"{self.name} has no value evaluator")
        return self.value_eval(np.asarray(x, dtype=float))


def prox(f, gamma, x):
    gamma = float(gamma)
    if not gamma > 0.0:
        raise ParameterError(f"prox parameter must be positive, got {gamma}")
    if not 1.0 + gamma * f.modulus > 0.0:
        raise DomainError(
            f"ill-posed prox: 1 + gamma*alpha = {1.0 + gamma * f.modulus} <= 0 for {f.name}"
        )
    if f.prox_eval is None:
        raise DomainError(f"{f.name} has no closed-form prox")
    return f.prox_eval(gamma, as_vector(x))


def quadratic(M, b=None, c0=0.0):
    """``f(x) = x'Mx/2 + <b, x> + c0``.

    A scalar `M` stands for ``M * Id`` and gives a dimension-free function.
    The modulus is the smallest eigenvalue of `M`.
    """
    c0 = float(c0)
    if np.ndim(M) == 0:
        m = float(M)
        bv = np.zeros(()) if b is None else as_vector(b, name="b")

        def _prox(gamma, x):
            denom = 1.0 + gamma * m
            if denom <= 0.0:
                raise DomainError(f"1 + gamma*m = {denom} <= 0")
            return (x - gamma * bv) / denom

        def _value(x):
            return 0.5 * m * np.sum(x * x, axis=-1) + np.sum(x * bv, axis=-1) + c0

        return ProxFunction(
            prox_eval=_prox,
            modulus=m,
            value_eval=_value,
            subgradient_eval=lambda x: m * x + bv,
            gradient_lipschitz=abs(m),
            name=f"quadratic({m:g} I)",
        )

    M = as_matrix(M, name="matrix")
    n = M.shape[0]
    if M.shape != (n, n) or not np.allclose(M, M.T, atol=1e-12 * max(1.0, np.max(np.abs(M)))):
        raise ParameterError("quadratic needs a symmetric square matrix")
    M = 0.5 * (M + M.T)
    bv = np.zeros(n) if b is None else as_vector(b, dim=n, name="b")
    eig = np.linalg.eigvalsh(M)
    eye = np.eye(n)

    def _prox(gamma, x):
        return solve_spd(eye + gamma * M, x - gamma * bv)

    def _value(x):
        return 0.5 * np.einsum("...i,ij,...j->...", x, M, x) + x @ bv + c0

    return ProxFunction(
        prox_eval=_prox,
        modulus=float(eig[0]),
        value_eval=_value,
        subgradient_eval=lambda x: M @ x + bv,
        gradient_lipschitz=float(np.max(np.abs(eig))),
        name="quadratic",
    )


def zero_function():
    return quadratic(0.0)


def neg_sq_norm(c):
    """``f = -(c/2)||x||^2``, which is (-c)-convex."""
    c = float(c)

    def _prox(gamma, x):
        return x / (1.0 - gamma * c)

    return ProxFunction(
        prox_eval=_prox,
        modulus=-c,
        value_eval=lambda x: -0.5 * c * np.sum(x * x, axis=-1),
        subgradient_eval=lambda x: -c * x,
        gradient_lipschitz=abs(c),
        name=f"neg_sq_norm({c:g})",
    )


def one_norm(weight=1.0):
    """``f = weight * ||x||_1``; prox is soft thresholding at ``gamma*weight``."""
    w = float(weight)
    if w < 0.0:
        raise ParameterError("one_norm weight must be nonnegative")

    def _prox(gamma, x):
        return np.sign(x) * np.maximum(np.abs(x) - gamma * w, 0.0)

    return ProxFunction(
        prox_eval=_prox,
        modulus=0.0,
        value_eval=lambda x: w * np.sum(np.abs(x), axis=-1),
        subgradient_eval=lambda x: w * np.sign(x),
        name=f"one_norm({w:g})",
    )


def indicator(C):
    """Indicator of a closed convex set; its prox is the projector for every gamma."""

    def _value(x):
        x = np.asarray(x, dtype=float)
        inside = np.apply_along_axis(lambda z: C.contains(z, 1e-12), -1, x)
        return np.where(inside, 0.0, np.inf)

    return ProxFunction(
        prox_eval=lambda gamma, x: C.project(x),
        modulus=0.0,
        value_eval=_value,
        name=f"indicator({C.name})",
    )


def add_functions(f, g):
    """Pointwise sum, for value evaluation only (no closed-form prox)."""
    if f.value_eval is None or g.value_eval is None:
        raise ParameterError("both summands need value evaluators")
    return ProxFunction(
        prox_eval=None,
        modulus=f.modulus + g.modulus,
        value_eval=lambda x: f.value_eval(x) + g.value_eval(x),
        name=f"{f.name} + {g.name}",
    )


def prox_of_sum(f, g, omega, r, config=None, x0=None, *, theta=1.0, q=None,
                gamma=1.0, kappa=0.5, tol=1e-8, max_iter=100_000):
    """Approximate ``Prox_{omega (f + g)}(r)`` using only the individual proxes.

    Parameters
    ----------
    f, g : ProxFunction
        Weakly convex summands with declared moduli ``alpha`` and ``beta``.
        They need ``alpha + beta > -1/omega``.
    omega : float
        Positive scale of the sum.
    r : array_like
        Point at which the prox is evaluated.
    config : SplitConfig, optional
        Full splitting configuration. If omitted, a balanced one is built
        from `theta`, `q`, `gamma`, `kappa`, `tol` and `max_iter`.
    x0 : array_like, optional
        Starting governing point, ``r`` by default.

    Returns
    -------
    (SolveResult, IterationTrace)
    """
    r = as_vector(r, name="r")
    omega = float(omega)
    if not omega > 0.0:
        raise ParameterError(f"omega must be positive, got {omega}")
    if not f.modulus + g.modulus > -1.0 / omega:
        raise InfeasibleError(
            f"alpha + beta = {f.modulus + g.modulus} <= -1/omega = {-1.0 / omega}"
        )
    if config is None:
        config = engine.balanced_config(
            omega, r, f.modulus, g.modulus, theta=theta, q=q, gamma=gamma,
            kappa=kappa, tol=tol, max_iter=max_iter,
        )
    return engine.solve_resolvent(subdifferential_of(f), subdifferential_of(g), config, x0)
