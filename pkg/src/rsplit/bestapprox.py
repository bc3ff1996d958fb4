"""Projection onto the intersection of two closed convex sets.

The normal cone of a closed convex set has the projector as its resolvent
for every positive parameter, so the splitting engine applied to
``(N_C, N_D)`` touches each set only through one projection per step.
"""

from typing import NamedTuple

import numpy as np

from . import engine
from .errors import ConfigError, ParameterError
from .engine import SplitConfig, Violation
from .linalg import as_vector
from .operators import normal_cone_of


def project_intersection(C, D, r, *, theta=1.0, q=None, sigma=0.5, tau=0.5, r_c=None,
                         r_d=None, gamma=1.0, kappa=0.5, tol=engine.DEFAULT_TOL,
                         max_iter=engine.DEFAULT_MAX_ITER, x0=None, keep_vectors=True):
    """Approximate ``P_{C cap D}(r)``.

    Needs ``sigma > 0``, ``tau >= 0`` and
    ``r_c + r_d = (sigma + tau)(q + r)/theta``; when both shifts are omitted
    the right-hand side is split evenly. The scale of the underlying
    resolvent is ``omega = theta/(sigma + tau)``, which does not change the
    answer. Returns ``(SolveResult, IterationTrace)``.
    """
    r = as_vector(r, name="r")
    q = np.zeros_like(r) if q is None else as_vector(q, dim=r.size, name="q")
    theta = float(theta)
    if not theta > 0:
        raise ParameterError(f"theta must be positive, got {theta}")
    violations = []
    if not sigma > 0:
        violations.append(Violation("sigma > 0", float(sigma)))
    if not tau >= 0:
        violations.append(Violation("tau >= 0", float(tau)))
    if violations:
        raise ConfigError(violations)
    total = (sigma + tau) * (q + r) / theta
    if r_c is None and r_d is None:
        r_c = 0.5 * total
        r_d = total - r_c
    elif r_d is None:
        r_c = as_vector(r_c, dim=r.size, name="r_c")
        r_d = total - r_c
    elif r_c is None:
        r_d = as_vector(r_d, dim=r.size, name="r_d")
        r_c = total - r_d
    res = float(np.linalg.norm(np.asarray(r_c) + np.asarray(r_d) - total))
    if res > engine.CONSTRAINT_RTOL * max(1.0, float(np.linalg.norm(total))):
        raise ConfigError([Violation("r_C + r_D = (sigma + tau)(q + r)/theta", res)])
    config = SplitConfig(theta / (sigma + tau), r, theta, q, sigma, tau, r_c, r_d,
                         gamma=gamma, kappa=kappa, tol=tol, max_iter=max_iter)
    return engine.solve_resolvent(normal_cone_of(C), normal_cone_of(D), config, x0,
                                  keep_vectors=keep_vectors)


def aamr_project(C, D, r, eta, gamma=1.0, kappa=0.5, tol=engine.DEFAULT_TOL,
                 max_iter=engine.DEFAULT_MAX_ITER, x0=None, keep_vectors=True):
    """:func:`project_intersection` with ``theta = 1/eta``, ``q = -r``,
    ``sigma = tau = (1 - eta)/(gamma eta)`` and zero shifts."""
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    r = as_vector(r, name="r")
    s = (1.0 - eta) / (gamma * eta)
    zero = np.zeros_like(r)
    return project_intersection(
        C, D, r, theta=1.0 / eta, q=-r, sigma=s, tau=s, r_c=zero, r_d=zero,
        gamma=gamma, kappa=kappa, tol=tol, max_iter=max_iter, x0=x0,
        keep_vectors=keep_vectors,
    )


class DykstraResult(NamedTuple):
    point: np.ndarray
    iterations: int
    converged: bool


def dykstra_project(C, D, r, tol=1e-12, max_iter=1_000_000):
    """Boyle-Dykstra alternating projections with correction terms.

    Stops when one full sweep moves the iterate by at most `tol` and the
    two half-step iterates are within `tol` of each other.
    """
    x = as_vector(r, name="r")
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for k in range(1, max_iter + 1):
        y = C.project(x + p)
        p = x + p - y
        x_new = D.project(y + q)
        q = y + q - x_new
        if np.linalg.norm(x_new - x) <= tol and np.linalg.norm(y - x_new) <= tol:
            return DykstraResult(x_new, k, True)
        x = x_new
    return DykstraResult(x, max_iter, False)
