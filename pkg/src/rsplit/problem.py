"""JSON problem specifications consumed by the command-line interface.

A spec is one JSON object::

    {
      "kind": "resolvent" | "prox" | "project",
      "operands": [<descriptor>, <descriptor>],
      "r": [...],
      "omega": 1.0,                 # resolvent and prox only
      "algorithm": {...},           # optional, partial SplitConfig
      "output": {"trace": "trace.csv", "format": "csv"}   # optional
    }

Descriptors carry a ``kind`` tag plus numeric parameters. Vectors are JSON
arrays, matrices arrays of rows. Loading normalizes every number to float,
so ``ProblemSpec.from_dict(spec.to_dict()) == spec``.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import operators, sets
from .prox import indicator, neg_sq_norm, one_norm, quadratic
from .engine import DEFAULT_MAX_ITER, DEFAULT_TOL, SplitConfig

PROBLEM_KINDS = ("resolvent", "prox", "project")

# parameter schemas: name -> (type, required)
SET_SCHEMAS = {
    "halfspace": {"normal": ("vector", True), "offset": ("scalar", True)},
    "hyperplane": {"normal": ("vector", True), "offset": ("scalar", True)},
    "ball": {"center": ("vector", True), "radius": ("scalar", True)},
    "box": {"lower": ("vector", True), "upper": ("vector", True)},
    "affine_subspace": {"matrix": ("rect_matrix", True), "rhs": ("rows_vector", True)},
}
FUNCTION_SCHEMAS = {
    "quadratic": {"matrix": ("matrix_or_scalar", True), "offset": ("vector", False),
                  "constant": ("scalar", False)},
    "neg_sq_norm": {"c": ("scalar", True)},
    "one_norm": {"weight": ("scalar", False)},
    "indicator": {"set": ("set", True)},
}
OPERATOR_SCHEMAS = {
    "zero": {},
    "scaled_identity": {"lambda": ("scalar", True)},
    "affine_quadratic": {"matrix": ("matrix", True), "offset": ("vector", False)},
    "subdifferential": {"function": ("function", True)},
    "normal_cone": {"set": ("set", True)},
}
OPERAND_SCHEMAS = {
    "resolvent": OPERATOR_SCHEMAS,
    "prox": FUNCTION_SCHEMAS,
    "project": SET_SCHEMAS,
}
ALGORITHM_FIELDS = {
    "theta": "scalar", "q": "vector", "sigma": "scalar", "tau": "scalar",
    "r_a": "vector", "r_b": "vector", "gamma": "scalar", "kappa": "scalar",
    "tol": "scalar", "max_iter": "integer", "x0": "vector", "eta": "scalar",
}
OUTPUT_FIELDS = {"trace": "string", "format": "string", "result": "string"}


class SpecError(ValueError):
    """Malformed problem spec; the message starts with the offending location."""


def _fail(where, msg):
    raise SpecError(f"{where}: {msg}")


def _scalar(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(where, f"expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        _fail(where, "must be finite")
    return value


def _vector(value, where, dim):
    if not isinstance(value, list) or not value:
        _fail(where, "expected a nonempty array of numbers")
    out = [_scalar(v, f"{where}[{i}]") for i, v in enumerate(value)]
    if dim is not None and len(out) != dim:
        _fail(where, f"has dimension {len(out)}, expected {dim}")
    return out


def _matrix(value, where, rows, cols):
    if not isinstance(value, list) or not value:
        _fail(where, "expected a nonempty array of rows")
    out = [_vector(row, f"{where}[{i}]", cols) for i, row in enumerate(value)]
    if rows is not None and len(out) != rows:
        _fail(where, f"has {len(out)} rows, expected {rows}")
    return out


def _descriptor(value, where, schemas, dim):
    if not isinstance(value, dict):
        _fail(where, "expected an object with a 'kind' tag")
    kind = value.get("kind")
    if kind not in schemas:
        _fail(f"{where}.kind", f"unknown kind {kind!r}; expected one of {sorted(schemas)}")
    schema = schemas[kind]
    extra = set(value) - set(schema) - {"kind"}
    if extra:
        _fail(where, f"unknown field(s) {sorted(extra)} for kind {kind!r}")
    out = {"kind": kind}
    rows = None
    for name, (typ, required) in schema.items():
        loc = f"{where}.{name}"
        if name not in value:
            if required:
                _fail(loc, "missing required field")
            continue
        raw = value[name]
        if typ == "scalar":
            out[name] = _scalar(raw, loc)
        elif typ == "vector":
            out[name] = _vector(raw, loc, dim)
        elif typ == "matrix":
            out[name] = _matrix(raw, loc, dim, dim)
        elif typ == "matrix_or_scalar":
            out[name] = _scalar(raw, loc) if not isinstance(raw, list) else _matrix(raw, loc, dim, dim)
        elif typ == "rect_matrix":
            out[name] = _matrix(raw, loc, None, dim)
            rows = len(out[name])
        elif typ == "rows_vector":
            out[name] = _vector(raw, loc, rows)
        elif typ == "set":
            out[name] = _descriptor(raw, loc, SET_SCHEMAS, dim)
        elif typ == "function":
            out[name] = _descriptor(raw, loc, FUNCTION_SCHEMAS, dim)
    return out


@dataclass
class ProblemSpec:
    kind: str
    operands: list
    r: list
    omega: Optional[float] = None
    algorithm: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @property
    def dim(self):
        return len(self.r)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            _fail("$", "top level must be a JSON object")
        extra = set(data) - {"kind", "operands", "r", "omega", "algorithm", "output"}
        if extra:
            _fail("$", f"unknown field(s) {sorted(extra)}")
        kind = data.get("kind")
        if kind not in PROBLEM_KINDS:
            _fail("kind", f"unknown problem kind {kind!r}; expected one of {list(PROBLEM_KINDS)}")
        if "r" not in data:
            _fail("r", "missing required field")
        r = _vector(data["r"], "r", None)
        dim = len(r)
        ops = data.get("operands")
        if not isinstance(ops, list) or len(ops) != 2:
            _fail("operands", "expected an array of exactly two descriptors")
        operands = [_descriptor(op, f"operands[{i}]", OPERAND_SCHEMAS[kind], dim)
                    for i, op in enumerate(ops)]
        omega = None
        if kind == "project":
            if data.get("omega") is not None:
                _fail("omega", "not used by project problems")
        else:
            if "omega" not in data:
                _fail("omega", "missing required field")
            omega = _scalar(data["omega"], "omega")
            if omega <= 0:
                _fail("omega", "must be positive")
        algorithm = {}
        raw_alg = data.get("algorithm", {})
        if not isinstance(raw_alg, dict):
            _fail("algorithm", "expected an object")
        for key, value in raw_alg.items():
            loc = f"algorithm.{key}"
            typ = ALGORITHM_FIELDS.get(key)
            if typ is None:
                _fail(loc, f"unknown field; expected one of {sorted(ALGORITHM_FIELDS)}")
            if typ == "vector":
                algorithm[key] = _vector(value, loc, dim)
            elif typ == "integer":
                if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                    _fail(loc, "expected a positive integer")
                algorithm[key] = int(value)
            else:
                algorithm[key] = _scalar(value, loc)
        output = {}
        raw_out = data.get("output", {})
        if not isinstance(raw_out, dict):
            _fail("output", "expected an object")
        for key, value in raw_out.items():
            if key not in OUTPUT_FIELDS:
                _fail(f"output.{key}", f"unknown field; expected one of {sorted(OUTPUT_FIELDS)}")
            if not isinstance(value, str):
                _fail(f"output.{key}", "expected a string")
            output[key] = value
        if output.get("format", "csv") not in ("csv", "jsonl"):
            _fail("output.format", "expected 'csv' or 'jsonl'")
        return cls(kind, operands, r, omega, algorithm, output)

    def to_dict(self):
        out = {"kind": self.kind, "operands": self.operands, "r": self.r}
        if self.omega is not None:
            out["omega"] = self.omega
        if self.algorithm:
            out["algorithm"] = self.algorithm
        if self.output:
            out["output"] = self.output
        return out

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text, source="<spec>"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
        try:
            return cls.from_dict(data)
        except SpecError as exc:
            raise SpecError(f"{source}: {exc}") from None

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read(), source=str(path))

    def build_operands(self):
        """Operators, prox functions or sets, according to ``kind``."""
        builder = {"resolvent": build_operator, "prox": build_function, "project": build_set}
        return tuple(builder[self.kind](d) for d in self.operands)

    def split_config(self, alpha, beta, **overrides):
        """SplitConfig from the algorithm block; unspecified split parameters are balanced.

        Only meaningful for ``resolvent`` and ``prox`` problems. An ``eta``
        entry sets ``theta = 1/eta``.
        """
        alg = {**self.algorithm, **overrides}
        r = np.array(self.r)
        omega = self.omega
        theta = alg.get("theta", 1.0)
        if alg.get("eta") is not None:
            theta = 1.0 / alg["eta"]
        q = np.array(alg.get("q", np.zeros_like(r)), dtype=float)
        sigma, tau = alg.get("sigma"), alg.get("tau")
        if sigma is None and tau is None:
            half = theta / (2.0 * omega)
            skew = 0.5 * theta * (beta - alpha)
            sigma, tau = half + skew, half - skew
        elif tau is None:
            tau = theta / omega - sigma
        elif sigma is None:
            sigma = theta / omega - tau
        shift = (q + r) / omega
        r_a, r_b = alg.get("r_a"), alg.get("r_b")
        if r_a is None and r_b is None:
            r_a = 0.5 * shift
            r_b = shift - r_a
        elif r_b is None:
            r_b = shift - np.array(r_a)
        elif r_a is None:
            r_a = shift - np.array(r_b)
        return SplitConfig(
            omega, r, theta, q, sigma, tau, r_a, r_b,
            gamma=alg.get("gamma", 1.0),
            kappa=alg.get("kappa", 0.5),
            tol=alg.get("tol", DEFAULT_TOL),
            max_iter=alg.get("max_iter", DEFAULT_MAX_ITER),
        )


def build_set(d):
    kind = d["kind"]
    if kind == "halfspace":
        return sets.Halfspace(d["normal"], d["offset"])
    if kind == "hyperplane":
        return sets.Hyperplane(d["normal"], d["offset"])
    if kind == "ball":
        return sets.Ball(d["center"], d["radius"])
    if kind == "box":
        return sets.Box(d["lower"], d["upper"])
    if kind == "affine_subspace":
        return sets.AffineSubspace(d["matrix"], d["rhs"])
    raise SpecError(f"unknown set kind {kind!r}")


def build_function(d):
    kind = d["kind"]
    if kind == "quadratic":
        return quadratic(d["matrix"], d.get("offset"), d.get("constant", 0.0))
    if kind == "neg_sq_norm":
        return neg_sq_norm(d["c"])
    if kind == "one_norm":
        return one_norm(d.get("weight", 1.0))
    if kind == "indicator":
        return indicator(build_set(d["set"]))
    raise SpecError(f"unknown function kind {kind!r}")


def build_operator(d):
    kind = d["kind"]
    if kind == "zero":
        return operators.zero_operator()
    if kind == "scaled_identity":
        return operators.scaled_identity(d["lambda"])
    if kind == "affine_quadratic":
        offset = d.get("offset", [0.0] * len(d["matrix"]))
        return operators.affine_quadratic(d["matrix"], offset)
    if kind == "subdifferential":
        return operators.subdifferential_of(build_function(d["function"]))
    if kind == "normal_cone":
        return operators.normal_cone_of(build_set(d["set"]))
    raise SpecError(f"unknown operator kind {kind!r}")
