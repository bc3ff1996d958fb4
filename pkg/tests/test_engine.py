import json
import math

import numpy as np
import pytest

from rsplit import engine
from rsplit.engine import (
    IterationTrace,
    SplitConfig,
    TraceRecord,
    aamr_params,
    avg_variant_params,
    balanced_config,
    dr_step,
    estimate_rate,
    log_residual_fit,
    maxmono_config,
    maxmono_resolvent,
    resolvent_A_sigma,
    solve_resolvent,
    swap_roles,
    validate_config,
)
from rsplit.errors import ConfigError, GammaIncompatibleError, InfeasibleError, ParameterError
from rsplit.operators import (
    affine_quadratic,
    normal_cone_of,
    resolvent,
    scaled_identity,
    with_modulus,
    zero_operator,
)
from rsplit.sets import Ball, Halfspace
from rsplit.verification import (
    balanced_for,
    quadratic_resolvent_oracle,
    random_psd,
    random_quadratic_pair,
)


def quad_instance(rng, n=4):
    M1, M2 = random_psd(rng, n, 0.1), random_psd(rng, n, 0.2)
    b1, b2 = rng.standard_normal(n), rng.standard_normal(n)
    return M1, b1, M2, b2


# configuration

def test_balanced_config_monotone_case():
    r = np.array([1.0, -2.0])
    c = balanced_config(1.0, r, 0.0, 0.0)
    assert c.sigma == 0.5 and c.tau == 0.5
    np.testing.assert_array_equal(c.r_a, r / 2)
    np.testing.assert_array_equal(c.r_b, r / 2)
    assert validate_config(c, 0.0, 0.0) == []


def test_balanced_config_weakly_monotone_case():
    c = balanced_config(1.0, [1.0], -0.2, 0.1)
    assert c.sigma == pytest.approx(0.65, abs=1e-15)
    assert c.tau == pytest.approx(0.35, abs=1e-15)
    assert c.theta * -0.2 + c.sigma == pytest.approx(0.45)
    assert c.theta * 0.1 + c.tau == pytest.approx(0.45)
    assert c.sigma + c.tau == pytest.approx(c.theta / c.omega, rel=1e-12)


def test_balanced_config_infeasible():
    with pytest.raises(InfeasibleError):
        balanced_config(1.0, [1.0], -1.0, -1.0)


def test_balanced_config_gamma_incompatible_suggests_bound():
    # alpha = 2, beta = 0 gives sigma = -0.5
    with pytest.raises(GammaIncompatibleError) as info:
        balanced_config(1.0, [1.0], 2.0, 0.0, gamma=3.0)
    assert info.value.gamma_bound == pytest.approx(2.0)
    c = balanced_config(1.0, [1.0], 2.0, 0.0, gamma=1.5)
    assert validate_config(c, 2.0, 0.0) == []


def test_validate_config_sum_defect():
    c = balanced_config(1.0, [1.0, 2.0], 0.0, 0.0)
    bad = c.replace(sigma=c.sigma + 0.1)
    violations = validate_config(bad, 0.0, 0.0)
    assert [v.constraint for v in violations] == ["sigma + tau = theta/omega"]
    assert violations[0].residual == pytest.approx(0.1)


def test_validate_config_boundary_of_strict_inequality():
    # theta*alpha + sigma = 0 exactly, everything else valid
    c = SplitConfig(1.0, [1.0], 1.0, [0.0], 0.5, 0.5, [0.5], [0.5])
    violations = validate_config(c, -0.5, 0.5)
    assert [v.constraint for v in violations] == ["theta*alpha + sigma > 0"]


def test_validate_config_shift_defect_and_kappa():
    c = balanced_config(2.0, [1.0, 2.0], 0.0, 0.0)
    names = {v.constraint for v in validate_config(c.replace(r_a=c.r_a + 1.0, kappa=0.0), 0, 0)}
    assert names == {"r_A + r_B = (q + r)/omega", "kappa in (0, 1]"}


def test_solve_rejects_invalid_config_before_iterating():
    c = balanced_config(1.0, [1.0], 0.0, 0.0).replace(tau=0.7)
    with pytest.raises(ConfigError) as info:
        solve_resolvent(zero_operator(), zero_operator(), c)
    assert "sigma + tau = theta/omega" in str(info.value)


def test_swap_roles_serves_mirrored_condition():
    # theta*alpha + sigma = 0 on A fails, but the mirrored condition holds with B strict
    A, B = scaled_identity(-0.5), scaled_identity(1.0)
    r = np.array([3.0])
    c = SplitConfig(1.0, r, 1.0, [0.0], 0.5, 0.5, r / 2, r / 2)
    assert validate_config(c, A.modulus, B.modulus)
    res, _ = solve_resolvent(B, A, swap_roles(c))
    assert res.converged
    np.testing.assert_allclose(res.solution, r / (1 + 0.5), atol=1e-8)


# single step

def test_resolvent_A_sigma_zero_base():
    c = balanced_config(1.0, [1.0, 2.0], 0.0, 0.0, gamma=0.8)
    x = np.array([0.3, -1.0])
    np.testing.assert_allclose(resolvent_A_sigma(c, zero_operator(), x),
                               (x + c.gamma * c.r_a) / (1 + c.gamma * c.sigma))


def test_resolvent_A_sigma_untransformed(rng):
    M1, b1, _, _ = quad_instance(rng)
    A = affine_quadratic(M1, b1)
    c = SplitConfig(1.0, np.zeros(4), 1.0, np.zeros(4), 0.0, 1.0, np.zeros(4), np.zeros(4), gamma=0.7)
    x = rng.standard_normal(4)
    np.testing.assert_allclose(resolvent_A_sigma(c, A, x), resolvent(A, 0.7, x), rtol=1e-14)


def test_resolvent_A_sigma_matches_assembled_operator(rng):
    M1, b1, _, _ = quad_instance(rng)
    r, q = rng.standard_normal(4), rng.standard_normal(4)
    c = balanced_config(1.5, r, 0.0, 0.0, theta=2.0, q=q, gamma=0.6)
    # A_sigma(x) = (theta M + sigma I) x - M q + b - r_A
    lhs = np.eye(4) + c.gamma * (c.theta * M1 + c.sigma * np.eye(4))
    x = rng.standard_normal(4)
    direct = np.linalg.solve(lhs, x + c.gamma * (M1 @ q - b1 + c.r_a))
    np.testing.assert_allclose(resolvent_A_sigma(c, affine_quadratic(M1, b1), x), direct,
                               rtol=1e-10, atol=1e-12)


def test_dr_step_zero_operators_hand_computed():
    # omega = gamma = theta = 1, sigma = tau = 1/2, r_A = r_B = r/2 = (1/2, 1):
    # each reflection is x -> x/3 + (2/3, 4/3), so the pair is x -> x/9 + (8/9, 16/9)
    r = np.array([1.0, 2.0])
    c = balanced_config(1.0, r, 0.0, 0.0, kappa=1.0)
    Z = zero_operator()
    np.testing.assert_allclose(dr_step(c, Z, Z, [0.0, 0.0]), [8 / 9, 16 / 9], rtol=1e-15)
    np.testing.assert_allclose(dr_step(c, Z, Z, [9.0, 0.0]), [17 / 9, 16 / 9], rtol=1e-15)
    fixed = np.array([1.0, 2.0])
    np.testing.assert_allclose(dr_step(c, Z, Z, fixed), fixed, rtol=1e-15)


def test_dr_step_fixed_point_for_any_kappa(rng):
    M1, b1, M2, b2 = quad_instance(rng)
    A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
    r = rng.standard_normal(4)
    c = balanced_config(1.0, r, A.modulus, B.modulus, tol=1e-13)
    res, _ = solve_resolvent(A, B, c)
    for kappa in (0.1, 0.5, 1.0):
        step = dr_step(c.replace(kappa=kappa), A, B, res.governing)
        np.testing.assert_allclose(step, res.governing, atol=1e-10)


def test_dr_step_kappa_half_is_average(rng):
    M1, b1, M2, b2 = quad_instance(rng)
    A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
    c = balanced_config(1.0, rng.standard_normal(4), A.modulus, B.modulus)
    x = rng.standard_normal(4)
    double = dr_step(c.replace(kappa=1.0), A, B, x)
    np.testing.assert_allclose(dr_step(c, A, B, x), 0.5 * (x + double), rtol=1e-14, atol=1e-14)


# solving

def test_solve_zero_operators():
    r = np.array([1.0, 2.0])
    res, trace = solve_resolvent(zero_operator(), zero_operator(), balanced_config(1.0, r, 0, 0))
    assert res.converged
    np.testing.assert_allclose(res.solution, r)
    assert len(trace) == res.iterations + 1


@pytest.mark.parametrize("a, b, omega", [(1.0, 2.0, 1.0), (-0.3, 0.5, 2.0), (0.0, 0.0, 0.5), (3.0, -1.0, 0.25)])
def test_solve_scaled_identities(a, b, omega):
    r = np.array([1.0, -2.0, 0.5])
    A, B = scaled_identity(a), scaled_identity(b)
    res, _ = solve_resolvent(A, B, balanced_config(omega, r, a, b, gamma=0.5))
    assert res.converged
    np.testing.assert_allclose(res.solution, r / (1 + omega * (a + b)), atol=1e-8)


def test_solve_quadratic_pair_matches_oracle(rng):
    M1, b1, M2, b2 = quad_instance(rng, 6)
    A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
    r = rng.standard_normal(6)
    res, _ = solve_resolvent(A, B, balanced_config(2.0, r, A.modulus, B.modulus, tol=1e-10))
    oracle = quadratic_resolvent_oracle(M1, b1, M2, b2, 2.0, r)
    assert np.linalg.norm(res.solution - oracle) <= 1e-8


def test_oracle_equivalence_fifty_instances(rng):
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(1, 11))
        omega = (0.5, 1.0, 2.0)[i % 3]
        M1, b1, M2, b2, r = random_quadratic_pair(rng, n, omega)
        A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
        c = balanced_for(omega, r, A.modulus, B.modulus, tol=1e-9)
        res, _ = solve_resolvent(A, B, c)
        assert res.converged
        worst = max(worst, np.linalg.norm(res.solution - quadratic_resolvent_oracle(M1, b1, M2, b2, omega, r)))
    assert worst <= 1e-7


def test_resolvent_identity_at_solution(rng):
    tol = 1e-9
    for _ in range(10):
        M1, b1, M2, b2 = quad_instance(rng, 5)
        A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
        r, omega = rng.standard_normal(5), rng.uniform(0.3, 3.0)
        res, _ = solve_resolvent(A, B, balanced_config(omega, r, A.modulus, B.modulus, tol=tol))
        p = res.solution
        assert np.linalg.norm(p + omega * A(p) + omega * B(p) - r) <= 10 * tol


def test_converged_result_satisfies_stopping_rule(rng):
    M1, b1, M2, b2 = quad_instance(rng)
    A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
    c = balanced_config(1.0, rng.standard_normal(4), A.modulus, B.modulus, tol=1e-9)
    res, trace = solve_resolvent(A, B, c)
    last = trace.records[-1]
    assert res.converged
    assert last.shadow_residual <= c.tol
    assert last.fp_residual <= c.tol * (1 + np.linalg.norm(last.x))
    np.testing.assert_array_equal(res.solution, last.p)
    np.testing.assert_array_equal(res.governing, last.x)


def test_parameter_invariance(rng):
    M1, b1, M2, b2 = quad_instance(rng)
    A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
    alpha, beta = A.modulus, B.modulus
    omega, r = 1.0, rng.standard_normal(4)
    tol = 1e-10

    def plain_split(theta, q, gamma, kappa):
        half = theta / (2 * omega)
        shift = (q + r) / (2 * omega)
        return SplitConfig(omega, r, theta, q, half, half, shift, shift, gamma, kappa, tol)

    def lopsided(theta, q, gamma, kappa):
        return SplitConfig(omega, r, theta, q, 0.8 * theta / omega, 0.2 * theta / omega,
                           (q + r) / omega, np.zeros(4), gamma, kappa, tol)

    configs = [
        balanced_config(omega, r, alpha, beta, tol=tol),
        balanced_config(omega, r, alpha, beta, theta=2.0, q=r, gamma=0.5, kappa=1.0, tol=tol),
        plain_split(1.0, -r, 2.0, 0.5),
        plain_split(2.0, np.zeros(4), 1.0, 1.0),
        lopsided(2.0, -r, 0.5, 0.5),
        lopsided(1.0, r, 2.0, 1.0),
    ]
    solutions = []
    for c in configs:
        res, _ = solve_resolvent(A, B, c)
        assert res.converged
        solutions.append(res.solution)
    spread = max(np.linalg.norm(u - v) for u in solutions for v in solutions)
    assert spread <= 1e-6


def test_peaceman_rachford_converges(rng):
    M1, b1, M2, b2 = quad_instance(rng, 5)
    A, B = affine_quadratic(M1, b1), affine_quadratic(M2, b2)
    r = rng.standard_normal(5)
    res, trace = solve_resolvent(A, B, balanced_config(1.0, r, A.modulus, B.modulus, kappa=1.0))
    assert res.converged
    assert trace.records[-1].shadow_residual <= 1e-8


def test_nonconvergence_is_reported():
    # two disjoint halfspaces: no fixed point exists
    C = normal_cone_of(Halfspace([1.0], 0.0))
    D = normal_cone_of(Halfspace([-1.0], -1.0))
    c = balanced_config(1.0, [0.5], 0.0, 0.0, max_iter=200)
    res, trace = solve_resolvent(C, D, c)
    assert not res.converged
    assert res.iterations == 200
    assert len(trace) == 201


def test_monotone_residual_tail():
    r = np.array([1.0, -1.0, 2.0])
    for lam in (0.5, 1.0, 3.0):
        A = scaled_identity(lam)
        B = affine_quadratic(np.diag([0.0, 1.0, 2.0]), np.zeros(3))
        res, trace = solve_resolvent(A, B, balanced_for(1.0, r, lam, 0.0, tol=1e-12))
        fp = [rec.fp_residual for rec in trace.records if rec.n >= engine.DEFAULT_BURN_IN]
        assert all(b <= a + 1e-12 for a, b in zip(fp, fp[1:]))


def test_keep_vectors_false_keeps_residuals():
    r = np.array([1.0])
    c = balanced_config(1.0, r, 1.0, 0.0)
    res, trace = solve_resolvent(scaled_identity(1.0), zero_operator(), c, keep_vectors=False)
    assert trace.records[-1].x is None
    assert math.isinf(trace.records[0].fp_residual)
    np.testing.assert_allclose(res.solution, r / 2, atol=1e-8)


# specializations

def test_maxmono_zero_operators():
    r = np.array([1.0, 2.0])
    res, _ = maxmono_resolvent(zero_operator(), zero_operator(), 1.0, r)
    assert res.converged
    np.testing.assert_allclose(res.solution, r)


def test_maxmono_matches_best_approximation():
    from rsplit.bestapprox import project_intersection

    C, D = Ball([0.0, 0.0], 1.0), Halfspace([1.0, 0.0], 0.0)
    r = np.array([2.0, 1.0])
    res, _ = maxmono_resolvent(normal_cone_of(C), normal_cone_of(D), 1.0, r, tol=1e-10)
    ref, _ = project_intersection(C, D, r, tol=1e-10)
    np.testing.assert_allclose(res.solution, [0.0, 1.0], atol=1e-7)
    np.testing.assert_allclose(res.solution, ref.solution, atol=1e-7)


def test_maxmono_inner_argument_at_omega_one():
    seen = []

    def record(gamma, x):
        seen.append((gamma, np.array(x)))
        return np.zeros_like(x)

    from rsplit.operators import Operator

    A = Operator(resolvent_eval=record, name="probe")
    r = np.array([4.0, -2.0])
    x0 = np.array([1.0, 1.0])
    maxmono_resolvent(A, zero_operator(), 1.0, r, x0=x0, max_iter=1)
    gamma, arg = seen[0]
    assert gamma == 1.0
    np.testing.assert_array_equal(arg, 0.5 * (x0 + r))
    assert all(g == 1.0 for g, _ in seen)


def test_maxmono_step_agrees_with_general_path_to_four_ulp(rng):
    worst = 0.0
    for t in range(500):
        n = 3
        omega = float(rng.choice([0.75, 1.0, 2.0, 3.5]))
        theta = float(rng.choice([0.5, 1.0, 2.0]))
        r, q = rng.standard_normal(n), rng.standard_normal(n)
        if t % 2:
            A = normal_cone_of(Ball(np.zeros(n), 1.0))
            B = normal_cone_of(Halfspace(rng.standard_normal(n), 0.1))
        else:
            A = with_modulus(affine_quadratic(random_psd(rng, n), rng.standard_normal(n)), 0.0)
            B = with_modulus(affine_quadratic(random_psd(rng, n), rng.standard_normal(n)), 0.0)
        c = maxmono_config(omega, r, theta, q)
        x = 3 * rng.standard_normal(n)
        general, p = engine._Splitter(c, A, B)(x)
        y = 2 * (p + q) / theta - x
        _, trace = maxmono_resolvent(A, B, omega, r, theta, q, x0=x, max_iter=1, tol=1e-300)
        special = trace.records[1].x
        # units in the last place of the largest intermediate quantity of the step
        scale = max(np.max(np.abs(v)) for v in (x, theta * x, y, theta * y, r, q, general))
        worst = max(worst, np.max(np.abs(special - general)) / np.spacing(scale))
    assert worst <= 4


def test_maxmono_runs_agree_with_general_path(rng):
    for _ in range(5):
        A = with_modulus(affine_quadratic(random_psd(rng, 3), rng.standard_normal(3)), 0.0)
        B = normal_cone_of(Ball(rng.standard_normal(3), 2.0))
        r, q = rng.standard_normal(3), rng.standard_normal(3)
        special, _ = maxmono_resolvent(A, B, 1.5, r, 2.0, q, tol=1e-11)
        general, _ = solve_resolvent(A, B, maxmono_config(1.5, r, 2.0, q, tol=1e-11))
        np.testing.assert_allclose(special.solution, general.solution, atol=1e-9)


@pytest.mark.parametrize("omega", [0.5, 0.25])
def test_maxmono_rejects_small_omega(omega):
    with pytest.raises(ParameterError):
        maxmono_resolvent(zero_operator(), zero_operator(), omega, [1.0])


def test_maxmono_rejects_nonzero_modulus():
    with pytest.raises(ParameterError):
        maxmono_resolvent(scaled_identity(1.0), zero_operator(), 1.0, [1.0])


def test_aamr_params_half():
    r = np.array([1.0, -3.0])
    c = aamr_params(1.0, 0.5, r)
    assert (c.omega, c.theta, c.sigma, c.tau) == (1.0, 2.0, 1.0, 1.0)
    np.testing.assert_array_equal(c.q, -r)
    np.testing.assert_array_equal(c.r_a + c.r_b, np.zeros(2))
    assert validate_config(c, 0.0, 0.0) == []


@pytest.mark.parametrize("gamma, eta", [(0.3, 0.2), (1.0, 0.9), (4.0, 0.5)])
def test_aamr_params_constraints(gamma, eta):
    c = aamr_params(gamma, eta, [1.0])
    assert c.sigma + c.tau == pytest.approx(c.theta / c.omega, rel=1e-12)
    assert validate_config(c, 0.0, 0.0) == []


@pytest.mark.parametrize("eta", [0.0, 1.0, -0.1, 1.5])
def test_specialization_params_reject_eta(eta):
    with pytest.raises(ParameterError):
        aamr_params(1.0, eta, [1.0])
    with pytest.raises(ParameterError):
        avg_variant_params(eta, [1.0])


def test_avg_variant_params_half():
    r = np.array([2.0, 5.0])
    omega, theta, q = avg_variant_params(0.5, r)
    assert (omega, theta) == (1.0, 2.0)
    np.testing.assert_array_equal(q, r)


def test_avg_variant_solution_contract(rng):
    eta = 0.3
    M1, b1, M2, b2 = quad_instance(rng, 3)
    A = with_modulus(affine_quadratic(M1, b1), 0.0)
    B = with_modulus(affine_quadratic(M2, b2), 0.0)
    r = rng.standard_normal(3)
    omega, theta, q = avg_variant_params(eta, r)
    res, _ = maxmono_resolvent(A, B, omega, r, theta, q, tol=1e-12)
    assert res.converged
    np.testing.assert_allclose(resolvent(A, 1.0, res.governing), res.solution, atol=1e-10)
    oracle = quadratic_resolvent_oracle(M1, b1, M2, b2, 1 / (2 * (1 - eta)), r)
    np.testing.assert_allclose(res.solution, oracle, atol=1e-8)


# rate estimation

def geometric_trace(rho, count=60, c=3.0):
    records = [TraceRecord(0, None, None, math.inf, math.inf)]
    records += [TraceRecord(n, None, None, c * rho**n, c * rho**n) for n in range(1, count)]
    return IterationTrace(records)


@pytest.mark.parametrize("rho", [0.1, 0.5, 0.93])
def test_estimate_rate_exact_geometric(rho):
    assert estimate_rate(geometric_trace(rho)) == pytest.approx(rho, abs=1e-6)
    assert log_residual_fit(geometric_trace(rho)).r_squared == pytest.approx(1.0)


def test_estimate_rate_constant_is_absent():
    assert estimate_rate(geometric_trace(1.0)) is None


def test_estimate_rate_insufficient_data():
    assert estimate_rate(geometric_trace(0.5, count=25)) is None


def test_estimate_rate_engine_baseline():
    # with A = Id and B = 0 the balanced split at omega = gamma = 1 gives sigma = 0,
    # so both reflections are constant maps and x_n - x_bar halves at every step
    r = np.array([1.0, -2.0])
    c = balanced_config(1.0, r, 1.0, 0.0, tol=1e-13)
    res, trace = solve_resolvent(scaled_identity(1.0), zero_operator(), c)
    assert res.converged
    assert res.rate_estimate == pytest.approx(0.5, abs=1e-6)
    np.testing.assert_allclose(res.solution, r / 2, atol=1e-12)


# export

def test_trace_csv_and_jsonl(tmp_path):
    r = np.array([1.0, 2.0])
    res, trace = solve_resolvent(scaled_identity(1.0), zero_operator(),
                                 balanced_config(1.0, r, 1.0, 0.0))
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,fp_residual,shadow_residual"
    assert len(lines) == res.iterations + 2
    assert lines[1].startswith("0,inf,inf")
    jpath = tmp_path / "trace.jsonl"
    trace.write_jsonl(jpath)
    rows = [json.loads(line) for line in jpath.read_text().splitlines()]
    assert [row["n"] for row in rows] == list(range(res.iterations + 1))
    np.testing.assert_allclose(rows[-1]["p"], res.solution)


def test_solve_result_json_fields():
    res, _ = solve_resolvent(zero_operator(), zero_operator(), balanced_config(1.0, [1.0], 0, 0))
    data = json.loads(res.to_json())
    assert set(data) == {"solution", "governing", "iterations", "converged", "rate_estimate"}
    assert data["solution"] == [1.0]
