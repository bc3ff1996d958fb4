"""Command-line front end.

Exit status: 0 on convergence, 1 on spec or configuration errors, 2 when
the iteration (or a verification suite) fails.
"""

import argparse
import itertools
import sys

import numpy as np

from . import engine, verification
from .bestapprox import aamr_project, dykstra_project, project_intersection
from .errors import ConfigError, SplittingError
from .prox import prox_of_sum
from .problem import ProblemSpec, SpecError

EXIT_OK, EXIT_ERROR, EXIT_DIVERGED = 0, 1, 2
SWEEP_AGREEMENT = 1e-6


def fmt(value):
    return f"{value:.12g}"


def fmt_vec(v):
    return "[" + ", ".join(fmt(float(c)) for c in np.asarray(v)) + "]"


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _load(path, kind):
    spec = ProblemSpec.load(path)
    if spec.kind != kind:
        raise SpecError(f"{path}: kind is {spec.kind!r}, this command needs {kind!r}")
    return spec


def _x0(spec):
    x0 = spec.algorithm.get("x0")
    return None if x0 is None else np.array(x0)


def _solve(spec, **overrides):
    """Run the solver for `spec`; returns ``(SolveResult, IterationTrace)``."""
    first, second = spec.build_operands()
    if spec.kind == "project":
        alg = {**spec.algorithm, **overrides}
        common = dict(gamma=alg.get("gamma", 1.0), kappa=alg.get("kappa", 0.5),
                      tol=alg.get("tol", engine.DEFAULT_TOL),
                      max_iter=alg.get("max_iter", engine.DEFAULT_MAX_ITER), x0=_x0(spec))
        if alg.get("eta") is not None:
            return aamr_project(first, second, spec.r, alg["eta"], **common)
        return project_intersection(
            first, second, spec.r, theta=alg.get("theta", 1.0), q=alg.get("q"),
            sigma=alg.get("sigma", 0.5), tau=alg.get("tau", 0.5),
            r_c=alg.get("r_a"), r_d=alg.get("r_b"), **common,
        )
    config = spec.split_config(first.modulus, second.modulus, **overrides)
    if spec.kind == "prox":
        return prox_of_sum(first, second, spec.omega, spec.r, config, _x0(spec))
    return engine.solve_resolvent(first, second, config, _x0(spec))


def _report(result, trace, spec):
    print(f"solution: {fmt_vec(result.solution)}")
    print(f"iterations: {result.iterations}")
    print(f"converged: {str(result.converged).lower()}")
    rate = "none" if result.rate_estimate is None else fmt(result.rate_estimate)
    print(f"rate: {rate}")
    out = spec.output
    if "trace" in out:
        if out.get("format", "csv") == "jsonl":
            trace.write_jsonl(out["trace"])
        else:
            trace.write_csv(out["trace"])
    if "result" in out:
        with open(out["result"], "w") as fh:
            fh.write(result.to_json(indent=2) + "\n")


def _run_single(args, kind):
    spec = _load(args.spec, kind)
    result, trace = _solve(spec)
    _report(result, trace, spec)
    if kind == "project" and getattr(args, "oracle", None) == "dykstra":
        C, D = spec.build_operands()
        oracle = dykstra_project(C, D, spec.r)
        print(f"dykstra: {fmt_vec(oracle.point)}")
        print(f"dykstra_converged: {str(oracle.converged).lower()}")
        print(f"discrepancy: {fmt(float(np.linalg.norm(result.solution - oracle.point)))}")
    return EXIT_OK if result.converged else EXIT_DIVERGED


def cmd_resolvent(args):
    return _run_single(args, "resolvent")


def cmd_prox(args):
    return _run_single(args, "prox")


def cmd_project(args):
    return _run_single(args, "project")


def cmd_sweep(args):
    spec = ProblemSpec.load(args.spec)
    gammas = args.gamma or [spec.algorithm.get("gamma", 1.0)]
    kappas = args.kappa or [spec.algorithm.get("kappa", 0.5)]
    etas = args.eta or [spec.algorithm.get("eta")]
    print("gamma,kappa,eta,iterations,converged,rate")
    solutions = []
    for gamma, kappa, eta in itertools.product(gammas, kappas, etas):
        result, _ = _solve(spec, gamma=gamma, kappa=kappa, eta=eta)
        rate = "" if result.rate_estimate is None else fmt(result.rate_estimate)
        eta_s = "" if eta is None else fmt(eta)
        print(f"{fmt(gamma)},{fmt(kappa)},{eta_s},{result.iterations},"
              f"{str(result.converged).lower()},{rate}")
        if result.converged:
            solutions.append(result.solution)
    if not solutions:
        print("# no grid point converged")
        return EXIT_DIVERGED
    spread = max(float(np.linalg.norm(a - b)) for a in solutions for b in solutions)
    agree = spread <= SWEEP_AGREEMENT
    print(f"# converged={len(solutions)} max_solution_spread={fmt(spread)} "
          f"agree={str(agree).lower()}")
    return EXIT_OK


def cmd_verify(args):
    if args.suite not in verification.SUITES:
        _err(f"unknown suite {args.suite!r}; valid suites: {', '.join(verification.SUITES)}")
        return EXIT_ERROR
    seed = verification.default_seed()
    reports = verification.run_suite(args.suite, seed)
    text = verification.reports_to_json(reports)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    failed = sum(not rep.passed for rep in reports)
    print(f"{args.suite}: {len(reports) - failed}/{len(reports)} passed (seed {seed:#x})",
          file=sys.stderr)
    return EXIT_DIVERGED if failed else EXIT_OK


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rsplit",
        description="Resolvents of operator sums, proxes of sums and projections onto "
                    "intersections by relaxed reflection splitting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("resolvent", help="approximate J_{omega(A+B)}(r)")
    p.add_argument("spec")
    p.set_defaults(func=cmd_resolvent)

    p = sub.add_parser("prox", help="approximate Prox_{omega(f+g)}(r)")
    p.add_argument("spec")
    p.set_defaults(func=cmd_prox)

    p = sub.add_parser("project", help="approximate P_{C cap D}(r)")
    p.add_argument("spec")
    p.add_argument("--oracle", choices=["dykstra"], help="cross-check with Dykstra's algorithm")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("sweep", help="solve over a grid of gamma, kappa and eta values")
    p.add_argument("spec")
    p.add_argument("--gamma", type=_floats, help="comma-separated values")
    p.add_argument("--kappa", type=_floats, help="comma-separated values")
    p.add_argument("--eta", type=_floats, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help=f"one of: {', '.join(verification.SUITES)}")
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args)
    except ConfigError as exc:
        for violation in exc.violations:
            _err(str(violation))
        return EXIT_ERROR
    except (SpecError, SplittingError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
