"""Resolvent of a scaled operator sum by relaxed reflection splitting.

Given operators ``A`` (alpha-monotone) and ``B`` (beta-monotone) with
``alpha + beta > -1/omega``, the point ``J_{omega(A+B)}(r)`` is obtained from
the individual resolvents only. With ``theta > 0``, a shift ``q`` and a
split

    sigma + tau = theta / omega,    r_A + r_B = (q + r) / omega,

define ``A_sigma = A o (theta Id - q) + sigma Id - r_A`` and ``B_tau``
likewise. The governing sequence is

    x+ = (1 - kappa) x + kappa R_{gamma B_tau} R_{gamma A_sigma} x

where ``R = 2J - Id``, and the shadow sequence

    p_n = J_{c A}(s x_n + c r_A - q),   s = theta/(1 + gamma sigma), c = gamma s

converges to ``J_{omega(A+B)}(r)``. ``kappa = 1/2`` is Douglas-Rachford,
``kappa = 1`` is Peaceman-Rachford.
"""

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    ConfigError,
    GammaIncompatibleError,
    InfeasibleError,
    ParameterError,
)
from .linalg import as_vector
from .operators import TransformedOperator, resolvent, transformed_resolvent

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100_000
DEFAULT_BURN_IN = 20
# relative tolerance on the two linear parameter constraints
CONSTRAINT_RTOL = 1e-12
# converged runs on single-valued operators satisfy the resolvent identity to this many tol
IDENTITY_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class SplitConfig:
    """Full parameter tuple of the splitting iteration.

    Construction only normalizes types and dimensions. Admissibility
    against the operator moduli is checked by :func:`validate_config`.
    """

    omega: float
    r: np.ndarray
    theta: float
    q: np.ndarray
    sigma: float
    tau: float
    r_a: np.ndarray
    r_b: np.ndarray
    gamma: float = 1.0
    kappa: float = 0.5
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        r = as_vector(self.r, name="r")
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("r", r)
        for key in ("q", "r_a", "r_b"):
            set_(key, as_vector(getattr(self, key), dim=r.size, name=key))
        for key in ("omega", "theta", "sigma", "tau", "gamma", "kappa", "tol"):
            set_(key, float(getattr(self, key)))
        if int(self.max_iter) != self.max_iter:
            raise ParameterError(f"max_iter must be an integer, got {self.max_iter}")
        set_("max_iter", int(self.max_iter))

    @property
    def dim(self):
        return self.r.size

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out

    def __eq__(self, other):
        if not isinstance(other, SplitConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class Violation:
    constraint: str
    residual: float

    def __str__(self):
        return f"{self.constraint} violated (residual {self.residual:.6g})"


@dataclass
class TraceRecord:
    n: int
    x: Optional[np.ndarray]
    p: Optional[np.ndarray]
    fp_residual: float
    shadow_residual: float


@dataclass
class IterationTrace:
    """Per-iteration record of governing points, shadow points and residuals.

    Record ``n`` holds ``x_n``, ``p_n``, ``||x_n - x_{n-1}||`` and
    ``||p_n - p_{n-1}||``; both residuals are ``inf`` at ``n = 0``.
    """

    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def fp_residuals(self):
        return np.array([rec.fp_residual for rec in self.records])

    @property
    def shadow_residuals(self):
        return np.array([rec.shadow_residual for rec in self.records])

    @property
    def governing(self):
        return np.array([rec.x for rec in self.records])

    @property
    def shadows(self):
        return np.array([rec.p for rec in self.records])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "fp_residual", "shadow_residual"])
            for rec in self.records:
                writer.writerow([rec.n, repr(rec.fp_residual), repr(rec.shadow_residual)])

    def write_jsonl(self, path):
        with open(path, "w") as fh:
            for rec in self.records:
                row = {
                    "n": rec.n,
                    "x": None if rec.x is None else rec.x.tolist(),
                    "p": None if rec.p is None else rec.p.tolist(),
                    "fp_residual": _json_float(rec.fp_residual),
                    "shadow_residual": _json_float(rec.shadow_residual),
                }
                fh.write(json.dumps(row) + "\n")


def _json_float(v):
    return v if math.isfinite(v) else repr(v)


@dataclass
class SolveResult:
    solution: np.ndarray
    governing: np.ndarray
    iterations: int
    converged: bool
    rate_estimate: Optional[float] = None

    def to_dict(self):
        return {
            "solution": self.solution.tolist(),
            "governing": self.governing.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "rate_estimate": self.rate_estimate,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _rel_ok(residual, scale):
    return residual <= CONSTRAINT_RTOL * max(1.0, scale)


def validate_config(c, alpha, beta):
    """List every admissibility constraint `c` violates for moduli (alpha, beta).

    An empty list means the iteration is well defined and its shadow
    sequence converges to ``J_{omega(A+B)}(r)``.
    """
    out = []
    positives = {
        "omega > 0": c.omega,
        "theta > 0": c.theta,
        "gamma > 0": c.gamma,
        "tol > 0": c.tol,
        "max_iter >= 1": c.max_iter,
    }
    for name, value in positives.items():
        if not value > 0:
            out.append(Violation(name, float(value)))
    if not 0.0 < c.kappa <= 1.0:
        out.append(Violation("kappa in (0, 1]", c.kappa))
    if c.omega > 0:
        target = c.theta / c.omega
        res = abs(c.sigma + c.tau - target)
        if not _rel_ok(res, abs(target)):
            out.append(Violation("sigma + tau = theta/omega", res))
        shift = (c.q + c.r) / c.omega
        res = float(np.linalg.norm(c.r_a + c.r_b - shift))
        if not _rel_ok(res, float(np.linalg.norm(shift))):
            out.append(Violation("r_A + r_B = (q + r)/omega", res))
        margin = alpha + beta + 1.0 / c.omega
        if not margin > 0:
            out.append(Violation("alpha + beta > -1/omega", margin))
    a_mod = c.theta * alpha + c.sigma
    if not a_mod > 0:
        out.append(Violation("theta*alpha + sigma > 0", a_mod))
    b_mod = c.theta * beta + c.tau
    if not b_mod >= 0:
        out.append(Violation("theta*beta + tau >= 0", b_mod))
    for name, s in (("sigma", c.sigma), ("tau", c.tau)):
        v = 1.0 + c.gamma * s
        if not v > 0:
            out.append(Violation(f"1 + gamma*{name} > 0", v))
    return out


def check_config(c, alpha, beta):
    violations = validate_config(c, alpha, beta)
    if violations:
        raise ConfigError(violations)


def swap_roles(c):
    """Exchange the A- and B-side parameters.

    ``solve_resolvent(B, A, swap_roles(c))`` runs the mirrored splitting,
    which is how the alternative condition with the strict inequality
    placed on ``B`` is served.
    """
    return c.replace(sigma=c.tau, tau=c.sigma, r_a=c.r_b, r_b=c.r_a)


def balanced_config(omega, r, alpha, beta, theta=1.0, q=None, gamma=1.0, kappa=0.5,
                    tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Split that equalizes the moduli of ``A_sigma`` and ``B_tau``.

    ``sigma = theta/(2 omega) + theta(beta - alpha)/2`` and
    ``tau = theta/(2 omega) - theta(beta - alpha)/2`` give both transformed
    operators the modulus ``theta(alpha + beta + 1/omega)/2``. The shift is
    split evenly, ``r_A = r_B = (q + r)/(2 omega)``.
    """
    r = as_vector(r, name="r")
    q = np.zeros_like(r) if q is None else as_vector(q, dim=r.size, name="q")
    omega = float(omega)
    theta = float(theta)
    if not omega > 0:
        raise ParameterError(f"omega must be positive, got {omega}")
    if not theta > 0:
        raise ParameterError(f"theta must be positive, got {theta}")
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    if not 0.0 < kappa <= 1.0:
        raise ParameterError(f"kappa must lie in (0, 1], got {kappa}")
    if not alpha + beta > -1.0 / omega:
        raise InfeasibleError(
            f"alpha + beta = {alpha + beta} <= -1/omega = {-1.0 / omega}: no admissible split"
        )
    half = theta / (2.0 * omega)
    skew = 0.5 * theta * (beta - alpha)
    sigma = half + skew
    tau = half - skew
    negative = [s for s in (sigma, tau) if s < 0]
    if negative and not all(1.0 + gamma * s > 0 for s in negative):
        bound = 1.0 / max(-s for s in negative)
        raise GammaIncompatibleError(
            f"gamma = {gamma} makes 1 + gamma*sigma or 1 + gamma*tau nonpositive "
            f"(sigma = {sigma}, tau = {tau}); choose gamma < {bound}",
            gamma_bound=bound,
        )
    shift = (q + r) / (2.0 * omega)
    c = SplitConfig(omega, r, theta, q, sigma, tau, shift, shift.copy(),
                    gamma=gamma, kappa=kappa, tol=tol, max_iter=max_iter)
    check_config(c, alpha, beta)
    return c


def resolvent_A_sigma(c, A, x):
    """``J_{gamma A_sigma}(x)``."""
    return transformed_resolvent(TransformedOperator(A, c.theta, c.q, c.sigma, c.r_a), c.gamma, x)


def resolvent_B_tau(c, B, x):
    """``J_{gamma B_tau}(x)``."""
    return transformed_resolvent(TransformedOperator(B, c.theta, c.q, c.tau, c.r_b), c.gamma, x)


class _Splitter:
    """Precomputed coefficients of one relaxed reflection step."""

    def __init__(self, c, A, B):
        self.A, self.B = A, B
        self.theta, self.q, self.kappa = c.theta, c.q, c.kappa
        self.s_a = c.theta / (1.0 + c.gamma * c.sigma)
        self.c_a = c.gamma * self.s_a
        self.off_a = self.c_a * c.r_a - c.q
        self.s_b = c.theta / (1.0 + c.gamma * c.tau)
        self.c_b = c.gamma * self.s_b
        self.off_b = self.c_b * c.r_b - c.q

    def shadow(self, x):
        return resolvent(self.A, self.c_a, self.s_a * x + self.off_a)

    def __call__(self, x):
        """Return ``(x_next, p)`` where `p` is the shadow point of `x`."""
        p = resolvent(self.A, self.c_a, self.s_a * x + self.off_a)
        y = 2.0 * (p + self.q) / self.theta - x
        pb = resolvent(self.B, self.c_b, self.s_b * y + self.off_b)
        z = 2.0 * (pb + self.q) / self.theta - y
        return (1.0 - self.kappa) * x + self.kappa * z, p


def dr_step(c, A, B, x):
    """One step ``(1 - kappa) x + kappa R_{gamma B_tau} R_{gamma A_sigma} x``."""
    return _Splitter(c, A, B)(as_vector(x, dim=c.dim))[0]


def _iterate(step, x0, tol, max_iter, keep_vectors=True, certify=None):
    """Run ``step`` (returning next governing point and current shadow) to convergence.

    Stops at the first ``n >= 1`` with ``||p_n - p_{n-1}|| <= tol`` and
    ``||x_n - x_{n-1}|| <= tol (1 + ||x_n||)``. When `certify` is given it
    must also accept the shadow point before the run counts as converged.
    """
    x = x0
    x_next, p = step(x)
    trace = IterationTrace()
    trace.records.append(TraceRecord(0, x if keep_vectors else None,
                                     p if keep_vectors else None, math.inf, math.inf))
    converged = False
    n = 0
    for n in range(1, max_iter + 1):
        x_prev, x = x, x_next
        if not np.all(np.isfinite(x)):
            n -= 1
            x = x_prev
            break
        x_next, p_new = step(x)
        fp = float(np.linalg.norm(x - x_prev))
        sr = float(np.linalg.norm(p_new - p))
        p = p_new
        trace.records.append(TraceRecord(n, x if keep_vectors else None,
                                         p if keep_vectors else None, fp, sr))
        if sr <= tol and fp <= tol * (1.0 + float(np.linalg.norm(x))):
            if certify is None or certify(p):
                converged = True
                break
    result = SolveResult(
        solution=p.copy(),
        governing=x.copy(),
        iterations=n,
        converged=converged,
        rate_estimate=estimate_rate(trace),
    )
    return result, trace


def identity_residual(A, B, omega, r, p):
    """``||p + omega A(p) + omega B(p) - r||`` for single-valued A and B."""
    return float(np.linalg.norm(p + omega * (A.apply(p) + B.apply(p)) - r))


def _certifier(A, B, omega, r, tol):
    # only single-valued operators expose a forward map to check against
    if A.apply is None or B.apply is None:
        return None
    bound = IDENTITY_FACTOR * tol
    return lambda p: identity_residual(A, B, omega, r, p) <= bound


def _require_maximal(*ops):
    for op in ops:
        if not op.maximal:
            raise ParameterError(f"{op.name} is not declared maximal; the splitting needs maximality")


def solve_resolvent(A, B, c, x0=None, keep_vectors=True):
    """Approximate ``J_{omega(A+B)}(r)`` with the configuration `c`.

    Parameters
    ----------
    A, B : Operator
        Maximal operators; their declared moduli are checked against `c`.
    c : SplitConfig
    x0 : array_like, optional
        Starting governing point, ``r`` by default.
    keep_vectors : bool
        Store ``x_n`` and ``p_n`` in the trace (residuals are always kept).

    Returns
    -------
    (SolveResult, IterationTrace)
        Non-convergence within ``max_iter`` is reported through
        ``SolveResult.converged``, not raised.

    Notes
    -----
    When both operators are single-valued (``apply`` is set), a run only
    counts as converged once the shadow point also satisfies
    ``||p + omega A(p) + omega B(p) - r|| <= 10 tol``. The residual tests
    alone do not imply this on ill-conditioned instances.
    """
    _require_maximal(A, B)
    check_config(c, A.modulus, B.modulus)
    x0 = c.r.copy() if x0 is None else as_vector(x0, dim=c.dim, name="x0")
    certify = _certifier(A, B, c.omega, c.r, c.tol)
    return _iterate(_Splitter(c, A, B), x0, c.tol, c.max_iter, keep_vectors, certify)


def maxmono_config(omega, r, theta=1.0, q=None, kappa=0.5, tol=DEFAULT_TOL,
                   max_iter=DEFAULT_MAX_ITER):
    """General configuration equivalent to :func:`maxmono_resolvent` (needs omega > 1/2)."""
    r = as_vector(r, name="r")
    q = np.zeros_like(r) if q is None else as_vector(q, dim=r.size, name="q")
    omega = float(omega)
    theta = float(theta)
    if not omega > 0.5:
        raise ParameterError(f"omega must exceed 1/2 for a positive step, got {omega}")
    half = theta / (2.0 * omega)
    shift = (q + r) / (2.0 * omega)
    gamma = 2.0 * omega / (theta * (2.0 * omega - 1.0))
    return SplitConfig(omega, r, theta, q, half, half, shift, shift.copy(),
                       gamma=gamma, kappa=kappa, tol=tol, max_iter=max_iter)


def maxmono_resolvent(A, B, omega, r, theta=1.0, q=None, kappa=0.5, tol=DEFAULT_TOL,
                      max_iter=DEFAULT_MAX_ITER, x0=None, keep_vectors=True):
    """``J_{omega(A+B)}(r)`` for maximally monotone A, B using ``J_A`` and ``J_B`` only.

    Each step evaluates the unscaled resolvents at
    ``(1 - 1/(2 omega))(theta x - q) + r/(2 omega)``. Only ``omega > 1/2``
    is supported; smaller scales go through :func:`solve_resolvent`.
    """
    if A.modulus != 0 or B.modulus != 0:
        raise ParameterError(
            "maxmono_resolvent is for monotone operators with declared modulus 0; "
            "use solve_resolvent for other moduli"
        )
    _require_maximal(A, B)
    omega = float(omega)
    theta = float(theta)
    if omega == 0.5:
        raise ParameterError("omega = 1/2 is excluded")
    if not omega > 0.5:
        raise ParameterError(f"omega < 1/2 is unsupported here (got {omega}); use solve_resolvent")
    if not theta > 0:
        raise ParameterError(f"theta must be positive, got {theta}")
    if not 0.0 < kappa <= 1.0:
        raise ParameterError(f"kappa must lie in (0, 1], got {kappa}")
    r = as_vector(r, name="r")
    q = np.zeros_like(r) if q is None else as_vector(q, dim=r.size, name="q")
    a = 1.0 - 1.0 / (2.0 * omega)
    shift = r / (2.0 * omega)

    def step(x):
        p = resolvent(A, 1.0, a * (theta * x - q) + shift)
        y = 2.0 * (p + q) / theta - x
        pb = resolvent(B, 1.0, a * (theta * y - q) + shift)
        z = 2.0 * (pb + q) / theta - y
        return (1.0 - kappa) * x + kappa * z, p

    x0 = r.copy() if x0 is None else as_vector(x0, dim=r.size, name="x0")
    return _iterate(step, x0, tol, max_iter, keep_vectors, _certifier(A, B, omega, r, tol))


def aamr_params(gamma, eta, r, kappa=0.5, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Configuration whose run is the averaged alternating modified reflections scheme.

    ``omega = gamma/(2(1 - eta))``, ``theta = 1/eta``, ``q = -r``,
    ``sigma = tau = (1 - eta)/(gamma eta)`` and ``r_A = r_B = 0``. The
    reflections become ``2 eta J_{gamma A}(x + r) - 2 eta r - x`` and the
    shadow point is ``J_{gamma A}(x + r)``.
    """
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    if not gamma > 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    r = as_vector(r, name="r")
    s = (1.0 - eta) / (gamma * eta)
    zero = np.zeros_like(r)
    return SplitConfig(gamma / (2.0 * (1.0 - eta)), r, 1.0 / eta, -r, s, s, zero, zero.copy(),
                       gamma=gamma, kappa=kappa, tol=tol, max_iter=max_iter)


class MaxMonoParams(NamedTuple):
    omega: float
    theta: float
    q: np.ndarray


def avg_variant_params(eta, r):
    """``(omega, theta, q)`` turning :func:`maxmono_resolvent` into the averaged variant.

    With ``omega = 1/(2(1 - eta))``, ``theta = 1/eta`` and
    ``q = (1 - eta) r / eta`` the reflections become
    ``2 eta J_A + 2(1 - eta) r - Id`` and the shadow point is ``J_A(x)``.
    """
    if not 0.0 < eta < 1.0:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    r = as_vector(r, name="r")
    return MaxMonoParams(1.0 / (2.0 * (1.0 - eta)), 1.0 / eta, (1.0 - eta) / eta * r)


class ResidualFit(NamedTuple):
    slope: float
    rate: float
    r_squared: float
    count: int


def log_residual_fit(trace, burn_in=DEFAULT_BURN_IN):
    """Least-squares line through ``(n, log fp_residual_n)`` for ``n >= burn_in``.

    Returns None when fewer than 10 positive finite residuals remain.
    """
    ns, logs = [], []
    for rec in trace.records:
        if rec.n >= burn_in and 0.0 < rec.fp_residual < math.inf:
            ns.append(rec.n)
            logs.append(math.log(rec.fp_residual))
    if len(ns) < 10:
        return None
    ns = np.asarray(ns, dtype=float)
    logs = np.asarray(logs)
    slope, intercept = np.polyfit(ns, logs, 1)
    fitted = slope * ns + intercept
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    ss_res = float(np.sum((logs - fitted) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ResidualFit(float(slope), math.exp(slope), r2, len(ns))


def estimate_rate(trace, burn_in=DEFAULT_BURN_IN):
    """Empirical linear rate ``exp(slope)`` of the fixed-point residuals, if below one."""
    fit = log_residual_fit(trace, burn_in)
    if fit is None or not fit.rate < 1.0:
        return None
    return fit.rate

