"""Operators accessed through their resolvents.

An :class:`Operator` never materializes its (possibly set-valued) graph.
It carries a resolvent evaluator ``(gamma, x) -> J_{gamma A}(x)`` together
with declared metadata: the monotonicity modulus ``alpha`` (negative for
weakly monotone operators), an optional Lipschitz constant and a
maximality flag. Single-valued operators may also supply ``apply`` for
forward evaluation, which the tests use to check resolvent identities.
"""

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NotPositiveDefiniteError, ParameterError
from .linalg import as_matrix, as_vector, solve_spd


@dataclass(frozen=True)
class Operator:
    resolvent_eval: Callable
    modulus: float = 0.0
    lipschitz: Optional[float] = None
    maximal: bool = True
    apply: Optional[Callable] = None
    name: str = "operator"

    def __call__(self, x):
        if self.apply is None:
            raise DomainError(f"{self.name} has no single-valued forward evaluation")
        return self.apply(np.asarray(x, dtype=float))


def zero_operator():
    return Operator(
        resolvent_eval=lambda gamma, x: np.array(x, dtype=float),
        modulus=0.0,
        lipschitz=0.0,
        apply=np.zeros_like,
        name="zero",
    )


def scaled_identity(lam):
    """``A = lam * Id``; maximally ``lam``-monotone and ``|lam|``-Lipschitz."""
    lam = float(lam)

    def _resolvent(gamma, x):
        denom = 1.0 + gamma * lam
        if denom == 0.0:
            raise DomainError("1 + gamma*lambda = 0: Id + gamma*A is singular")
        return np.asarray(x, dtype=float) / denom

    return Operator(
        resolvent_eval=_resolvent,
        modulus=lam,
        lipschitz=abs(lam),
        apply=lambda x: lam * x,
        name=f"scaled_identity({lam:g})",
    )


def affine_quadratic(M, b):
    """``A(x) = M x + b`` with symmetric `M`.

    The modulus is the smallest eigenvalue of `M`, the Lipschitz constant
    its spectral norm.
    """
    M = as_matrix(M, name="matrix")
    n = M.shape[0]
    if M.shape != (n, n):
        raise ParameterError(f"affine_quadratic needs a square matrix, got {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, np.max(np.abs(M)))):
        raise ParameterError("affine_quadratic needs a symmetric matrix")
    M = 0.5 * (M + M.T)
    b = as_vector(b, dim=n, name="offset")
    eig = np.linalg.eigvalsh(M)
    eye = np.eye(n)

    def _resolvent(gamma, x):
        try:
            return solve_spd(eye + gamma * M, np.asarray(x, dtype=float) - gamma * b)
        except NotPositiveDefiniteError as exc:
            raise DomainError(f"Id + gamma*M is not positive definite: {exc}") from None

    return Operator(
        resolvent_eval=_resolvent,
        modulus=float(eig[0]),
        lipschitz=float(np.max(np.abs(eig))),
        apply=lambda x: M @ x + b,
        name="affine_quadratic",
    )


def subdifferential_of(f):
    """Operator whose resolvent is the prox of `f`.

    `f` is any object with ``prox_eval``, ``modulus`` and optionally
    ``subgradient_eval`` and ``gradient_lipschitz`` attributes. The
    operator is single-valued (has ``apply``) only when `f` declares a
    gradient Lipschitz constant; a subgradient selection of a nonsmooth
    function is not exposed as the operator.
    """
    lipschitz = getattr(f, "gradient_lipschitz", None)
    return Operator(
        resolvent_eval=f.prox_eval,
        modulus=float(f.modulus),
        lipschitz=lipschitz,
        apply=getattr(f, "subgradient_eval", None) if lipschitz is not None else None,
        name=f"subdifferential({getattr(f, 'name', 'f')})",
    )


def normal_cone_of(C):
    """Normal cone of a closed convex set: its resolvent is ``P_C`` for every gamma."""
    return Operator(
        resolvent_eval=lambda gamma, x: C.project(x),
        modulus=0.0,
        name=f"normal_cone({getattr(C, 'name', type(C).__name__)})",
    )


def with_modulus(A, alpha):
    """Same operator declared with a weaker modulus ``alpha <= A.modulus``.

    Any alpha-monotone operator is also alpha'-monotone for alpha' <= alpha;
    this is how a strongly monotone operator is handed to routines that
    expect plain monotone inputs.
    """
    if alpha > A.modulus:
        raise ParameterError(f"cannot strengthen declared modulus {A.modulus} to {alpha}")
    return dataclasses.replace(A, modulus=float(alpha))


def resolvent(A, gamma, x):
    """Evaluate ``J_{gamma A}(x) = (Id + gamma A)^{-1}(x)``."""
    gamma = float(gamma)
    if not gamma > 0.0:
        raise ParameterError(f"resolvent parameter must be positive, got {gamma}")
    if A.maximal and not 1.0 + gamma * A.modulus > 0.0:
        raise DomainError(
            f"1 + gamma*alpha = {1.0 + gamma * A.modulus} <= 0: resolvent of {A.name} "
            "is not single-valued"
        )
    return A.resolvent_eval(gamma, as_vector(x, name="resolvent argument"))


def reflected_resolvent(A, gamma, x):
    x = np.asarray(x, dtype=float)
    return 2.0 * resolvent(A, gamma, x) - x


def transformed_modulus(alpha, theta, sigma):
    """Monotonicity modulus of ``A o (theta Id - q) + sigma Id - r``."""
    if not theta > 0:
        raise ParameterError(f"theta must be positive, got {theta}")
    return theta * alpha + sigma


@dataclass(frozen=True)
class TransformedOperator:
    """``A o (theta Id - q) + sigma Id - r_shift`` for a base operator ``A``."""

    base: Operator
    theta: float
    q: np.ndarray
    sigma: float
    r_shift: np.ndarray

    def __post_init__(self):
        if not self.theta > 0:
            raise ParameterError(f"theta must be positive, got {self.theta}")
        q = as_vector(self.q, name="q")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r_shift", as_vector(self.r_shift, dim=q.size, name="r_shift"))

    @property
    def modulus(self):
        return transformed_modulus(self.base.modulus, self.theta, self.sigma)

    @property
    def lipschitz(self):
        if self.base.lipschitz is None:
            return None
        return self.theta * self.base.lipschitz + abs(self.sigma)

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return self.base(self.theta * x - self.q) + self.sigma * x - self.r_shift

    def as_operator(self):
        return Operator(
            resolvent_eval=lambda gamma, x: transformed_resolvent(self, gamma, x),
            modulus=self.modulus,
            lipschitz=self.lipschitz,
            maximal=self.base.maximal,
            apply=self.apply if self.base.apply is not None else None,
            name=f"transformed({self.base.name})",
        )


def transformed_resolvent(T, gamma, x):
    """Resolvent of a :class:`TransformedOperator` from the base resolvent.

    ``J_{gamma T}(x) = (J_{c A}(s x + c r_shift - q) + q) / theta`` where
    ``s = theta/(1 + gamma sigma)`` and ``c = gamma s``.
    """
    gamma = float(gamma)
    if not gamma > 0.0:
        raise ParameterError(f"resolvent parameter must be positive, got {gamma}")
    d = 1.0 + gamma * T.sigma
    if d == 0.0:
        raise ParameterError("1 + gamma*sigma must be nonzero")
    if T.base.maximal and not 1.0 + gamma * T.modulus > 0.0:
        raise DomainError(f"1 + gamma*(theta*alpha + sigma) = {1.0 + gamma * T.modulus} <= 0")
    x = as_vector(x, dim=T.q.size)
    s = T.theta / d
    c = gamma * s
    arg = s * x + c * T.r_shift - T.q
    if c > 0.0:
        inner_point = resolvent(T.base, c, arg)
    else:
        # 1 + gamma*sigma < 0: the formula still holds with a negative base parameter
        inner_point = T.base.resolvent_eval(c, arg)
    return (inner_point + T.q) / T.theta
