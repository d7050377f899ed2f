"""Scenario files: strict JSON schema, validation and model construction.

Complex numbers are written either as plain numbers or as ``[re, im]``
pairs.  Unknown keys are rejected; every error carries the line of the
offending key in the source file.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import InvalidInputError

EXPERIMENTS = ("spectrum-grid", "continue", "egorov", "impacting", "classify",
               "oracle-check", "ray-stats")


class ScenarioError(InvalidInputError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line else ""
        super().__init__(prefix + message)


# type tags used by the schema tables
REAL, INT, CPLX, STR, BOOL = "real", "int", "complex", "str", "bool"
REALS, INTS, CPLXS, MATRIX = "reals", "ints", "complexes", "matrix"

MODEL_SCHEMA = {
    "rank_one": {"diag": (REALS, True), "phi": (CPLXS, True), "scale": (REAL, True)},
    "finite": {"h0": (MATRIX, True), "J": (MATRIX, True), "F": (MATRIX, False)},
    "random_finite": {"dim": (INT, True), "rank": (INT, False)},
    "random_rank_one": {"dim": (INT, True), "scale": (REAL, False)},
    "half_line_jacobi": {"sites": (INTS, True), "J": (MATRIX, True),
                         "truncation_dim": (INT, False)},
    "embedded_block": {"lambda0": (REAL, True), "v": (REAL, True), "truncation_dim": (INT, False)},
    "synthetic": {"family": (STR, True), "z0": (CPLX, False), "a": (CPLX, False),
                  "b": (CPLX, False), "center": (CPLX, False), "width": (REAL, False)},
}

EXPERIMENT_SCHEMA = {
    "spectrum-grid": {"points": (CPLXS, False), "re": (REALS, False), "im": (REALS, False)},
    "continue": {"start": (CPLX, True), "branch": (INT, False), "start_r": (CPLX, False),
                 "path": (CPLXS, True)},
    "egorov": {"interval": (REALS, True), "delta": (REAL, True), "grid_step": (REAL, False),
               "m_max": (INT, False), "scale": (REAL, False)},
    "impacting": {"lambdas": (REALS, False), "interval": (REALS, False), "delta": (REAL, False),
                  "lambda_step": (REAL, False), "y_ladder": (REALS, False),
                  "verify": (BOOL, False)},
    "classify": {"candidates": (CPLXS, False), "region": (REALS, False), "radius": (REAL, False),
                 "n_rays": (INT, False)},
    "oracle-check": {"lambdas": (REALS, False), "n_lambdas": (INT, False), "grid_n": (INT, False)},
    "ray-stats": {"z0": (CPLX, True), "region": (REALS, True), "n_rays": (INT, False),
                  "step": (REAL, False)},
}

KNOB_SCHEMA = {
    "tau_sigma": (REAL, False, (1e-16, 1e-2)),
    "tau_real": (REAL, False, (1e-14, 1e-1)),
    "real_margin": (REAL, False, (0.0, 1e-1)),
    "p": (STR, False, None),
    "eta_step": (REAL, False, (1e-12, 10.0)),
}

OUTPUT_SCHEMA = {"report": STR, "csv": STR, "svg": BOOL}
TOP_SCHEMA = ("model", "experiment", "seed", "repeat", "knobs", "output")


def _line_of(text, path):
    pos = 0
    for key in path:
        if isinstance(key, str):
            i = text.find(f'"{key}"', pos)
            if i >= 0:
                pos = i
    return text.count("\n", 0, pos) + 1 if text else None


def _to_complex(v):
    if isinstance(v, bool):
        raise TypeError
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float))
                                                   and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise TypeError


def _coerce(tag, v):
    if tag == REAL:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise TypeError
        return float(v)
    if tag == INT:
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeError
        return v
    if tag == STR:
        if not isinstance(v, str):
            raise TypeError
        return v
    if tag == BOOL:
        if not isinstance(v, bool):
            raise TypeError
        return v
    if tag == CPLX:
        return _to_complex(v)
    if tag in (REALS, INTS, CPLXS):
        if not isinstance(v, list):
            raise TypeError
        sub = {REALS: REAL, INTS: INT, CPLXS: CPLX}[tag]
        return [_coerce(sub, x) for x in v]
    if tag == MATRIX:
        if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
            raise TypeError
        rows = [[_to_complex(x) for x in r] for r in v]
        if len({len(r) for r in rows}) != 1:
            raise TypeError
        return np.array(rows, dtype=complex)
    raise AssertionError(tag)


def _check_section(obj, schema, path, text):
    if not isinstance(obj, dict):
        raise ScenarioError(f"'{'.'.join(path)}' must be an object", _line_of(text, path))
    out = {}
    for key, value in obj.items():
        if key not in schema:
            raise ScenarioError(f"unknown key '{key}' in '{'.'.join(path)}'",
                                _line_of(text, path + [key]))
        tag = schema[key][0] if isinstance(schema[key], tuple) else schema[key]
        try:
            out[key] = _coerce(tag, value)
        except TypeError:
            raise ScenarioError(f"'{'.'.join(path + [key])}' must be of type {tag}",
                                _line_of(text, path + [key])) from None
    for key, spec in schema.items():
        if isinstance(spec, tuple) and spec[1] and key not in out:
            raise ScenarioError(f"missing required key '{key}' in '{'.'.join(path)}'",
                                _line_of(text, path))
    return out


@dataclass
class Scenario:
    model: dict
    experiment: dict
    seed: int = 0
    repeat: int = 1
    knobs: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def kind(self):
        return self.experiment["type"]

    def build_models(self, seed=None):
        """Construct ``repeat`` models; random kinds draw from one seeded stream."""
        rng = np.random.default_rng(self.seed if seed is None else seed)
        return [build_model(self.model, rng) for _ in range(self.repeat)]


def build_model(spec, rng=None):
    kind = spec["kind"]
    p = spec
    if kind == "rank_one":
        return models.make_rank_one(p["diag"], p["phi"], p["scale"])
    if kind == "finite":
        return models.make_finite(p["h0"], p["J"], p.get("F"))
    if kind == "random_finite":
        return models.random_finite_model(rng, p["dim"], p.get("rank"))
    if kind == "random_rank_one":
        return models.random_rank_one(rng, p["dim"], p.get("scale", 1.0))
    if kind == "half_line_jacobi":
        return models.make_half_line_jacobi(p["sites"], p["J"], p.get("truncation_dim", 2000))
    if kind == "embedded_block":
        return models.make_embedded_block(p["lambda0"], p["v"], p.get("truncation_dim", 2000))
    if kind == "synthetic":
        fam = p["family"]
        if fam == "sqrt":
            return models.make_sqrt_family(p.get("z0", 0.5 + 0.5j))
        if fam == "two_point":
            return models.make_two_point_family(p.get("a", 0.3 + 0.5j), p.get("b", 0.7 + 0.5j))
        if fam == "cubic":
            return models.make_cubic_family(p.get("center", 0.5 + 0.5j), p.get("width", 0.2))
    raise InvalidInputError(f"unknown model {kind}/{spec.get('family')}")


def parse_scenario(text) -> Scenario:
    """Parse and validate scenario JSON text."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object", 1)
    for key in raw:
        if key not in TOP_SCHEMA:
            raise ScenarioError(f"unknown key '{key}'", _line_of(text, [key]))
    for key in ("model", "experiment"):
        if key not in raw:
            raise ScenarioError(f"missing required key '{key}'", 1)

    m = raw["model"]
    if not isinstance(m, dict) or m.get("kind") not in MODEL_SCHEMA:
        raise ScenarioError(f"model.kind must be one of {sorted(MODEL_SCHEMA)}",
                            _line_of(text, ["model", "kind"]))
    model = _check_section({k: v for k, v in m.items() if k != "kind"},
                           MODEL_SCHEMA[m["kind"]], ["model"], text)
    model["kind"] = m["kind"]
    if m["kind"] == "synthetic" and model["family"] not in ("sqrt", "two_point", "cubic"):
        raise ScenarioError("model.family must be one of sqrt, two_point, cubic",
                            _line_of(text, ["model", "family"]))
    if m["kind"] in ("random_finite", "random_rank_one") and not 1 <= model["dim"] <= 64:
        raise ScenarioError("model.dim must be in [1, 64]", _line_of(text, ["model", "dim"]))

    e = raw["experiment"]
    if not isinstance(e, dict) or e.get("type") not in EXPERIMENT_SCHEMA:
        raise ScenarioError(f"experiment.type must be one of {list(EXPERIMENTS)}",
                            _line_of(text, ["experiment", "type"]))
    exp = _check_section({k: v for k, v in e.items() if k != "type"},
                         EXPERIMENT_SCHEMA[e["type"]], ["experiment"], text)
    exp["type"] = e["type"]
    for key in ("interval",):
        if key in exp and (len(exp[key]) != 2 or not exp[key][0] < exp[key][1]):
            raise ScenarioError(f"experiment.{key} must be [a, b] with a < b",
                                _line_of(text, ["experiment", key]))
    if "region" in exp and (len(exp["region"]) != 4 or not (exp["region"][0] < exp["region"][1]
                                                          and exp["region"][2] < exp["region"][3])):
        raise ScenarioError("experiment.region must be [x0, x1, y0, y1] with x0<x1, y0<y1",
                            _line_of(text, ["experiment", "region"]))
    if "delta" in exp and exp["delta"] <= 0:
        raise ScenarioError("experiment.delta must be positive", _line_of(text, ["experiment", "delta"]))

    knobs = {}
    if "knobs" in raw:
        schema = {k: v[:2] for k, v in KNOB_SCHEMA.items()}
        knobs = _check_section(raw["knobs"], schema, ["knobs"], text)
        for k, v in knobs.items():
            rng_ = KNOB_SCHEMA[k][2]
            if rng_ and not rng_[0] <= v <= rng_[1]:
                raise ScenarioError(f"knobs.{k}={v} outside [{rng_[0]}, {rng_[1]}]",
                                    _line_of(text, ["knobs", k]))
        if "p" in knobs and knobs["p"] not in ("1", "2", "inf"):
            raise ScenarioError("knobs.p must be \"1\", \"2\" or \"inf\"", _line_of(text, ["knobs", "p"]))
    output = _check_section(raw.get("output", {}), OUTPUT_SCHEMA, ["output"], text)

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ScenarioError("seed must be a nonnegative integer", _line_of(text, ["seed"]))
    repeat = raw.get("repeat", 1)
    if isinstance(repeat, bool) or not isinstance(repeat, int) or not 1 <= repeat <= 10000:
        raise ScenarioError("repeat must be an integer in [1, 10000]", _line_of(text, ["repeat"]))
    return Scenario(model, exp, seed, repeat, knobs, output, raw)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
