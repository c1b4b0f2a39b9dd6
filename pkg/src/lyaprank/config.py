"""JSON run configuration: schema, loading and construction of library objects."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Optional

import jsonschema
import numpy as np

from .errors import ConfigError
from .lyapunov import MatrixFamily, RankOneMatrix, random_positive_family
from .mirsky import BFreeSet
from .multifractal import PotentialSpec
from .sequences import (
    BernoulliSource,
    BFreeSource,
    CounterexampleSource,
    ExplicitSource,
    MarkovSource,
    Substitution,
    SubstitutionSource,
    named_substitution,
)

_NUM = {"type": "number"}
_ENTRY = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}
_VEC = {"type": "array", "items": _ENTRY, "minItems": 1}
_MAT = {"type": "array", "items": _VEC, "minItems": 1}
_PROB = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}

BFREE_SCHEMA = {
    "oneOf": [
        {"type": "object", "properties": {"type": {"const": "squarefree"}},
         "required": ["type"], "additionalProperties": False},
        {"type": "object", "properties": {"type": {"const": "kfree"}, "k": {"type": "integer", "minimum": 2}},
         "required": ["type", "k"], "additionalProperties": False},
        {"type": "object", "properties": {"type": {"const": "explicit"},
                                          "generators": {"type": "array", "items": {"type": "integer", "minimum": 2},
                                                         "minItems": 1}},
         "required": ["type", "generators"], "additionalProperties": False},
    ]
}

SEQUENCE_SCHEMA = {
    "oneOf": [
        {"type": "object",
         "properties": {"type": {"const": "substitution"}, "name": {"type": "string"},
                        "images": {"type": "array", "minItems": 2,
                                   "items": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                             "minItems": 1}},
                        "seed": {"type": "integer", "minimum": 0}},
         "required": ["type"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "bfree"}, "set": BFREE_SCHEMA},
         "required": ["type", "set"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "bernoulli"}, "p": _PROB, "seed": {"type": "integer"}},
         "required": ["type", "p", "seed"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "markov"}, "P": {"type": "array", "items": _PROB, "minItems": 1},
                        "seed": {"type": "integer"}},
         "required": ["type", "P", "seed"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "explicit"}, "word": {"type": "string"}},
         "required": ["type", "word"], "additionalProperties": False},
        {"type": "object",
         "properties": {"type": {"const": "counterexample"}},
         "required": ["type"], "additionalProperties": False},
    ]
}

FAMILY_SCHEMA = {
    "oneOf": [
        {"type": "object",
         "properties": {
             "A0": {"oneOf": [
                 {"type": "object", "properties": {"u": _VEC, "v": _VEC},
                  "required": ["u", "v"], "additionalProperties": False},
                 _MAT]},
             "others": {"type": "array", "items": _MAT, "minItems": 1}},
         "required": ["A0", "others"], "additionalProperties": False},
        {"type": "object",
         "properties": {"random": {"type": "object",
                                   "properties": {"d": {"type": "integer", "minimum": 1},
                                                  "m": {"type": "integer", "minimum": 2},
                                                  "seed": {"type": "integer"}},
                                   "required": ["d", "seed"], "additionalProperties": False}},
         "required": ["random"], "additionalProperties": False},
    ]
}

METHODS = ["empirical", "michel", "durand", "inclusionExclusion", "mirsky", "bernoulli", "markov"]

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "command": {"enum": ["freq", "lyap", "spectrum", "validate", "sequence"]},
        "sequence": SEQUENCE_SCHEMA,
        "methods": {"type": "array", "items": {"enum": METHODS}, "minItems": 1},
        "method": {"enum": METHODS},
        "family": FAMILY_SCHEMA,
        "n": {"type": "integer", "minimum": 1},
        "max_return_len": {"type": "integer", "minimum": 1},
        "norm": {"enum": ["frobenius", "one", "sum", "inf"]},
        "precision": {"type": "number", "exclusiveMinimum": 0},
        "potential": _MAT,
        "weights": SEQUENCE_SCHEMA,
        "grid": {"oneOf": [
            {"type": "object",
             "properties": {"min": _NUM, "max": _NUM, "points": {"type": "integer", "minimum": 0}},
             "required": ["min", "max", "points"], "additionalProperties": False},
            {"type": "array", "items": _NUM}]},
        "check_derivative": {"type": "boolean"},
        "output": {"type": "object",
                   "properties": {"pressure_csv": {"type": "string"},
                                  "spectrum_csv": {"type": "string"},
                                  "svg": {"type": "string"},
                                  "report": {"type": "string"}},
                   "additionalProperties": False},
        "criteria": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "constants": {"type": "object", "additionalProperties": {"type": "number"}},
    },
    "additionalProperties": False,
}


def _branch_for_tag(err: jsonschema.ValidationError):
    """For a oneOf over ``{"type": <const>, ...}`` objects, the errors of the
    branch whose tag matches, or None if no branch claims the tag."""
    branches: Dict[int, list] = {}
    for sub in err.context:
        branches.setdefault(sub.relative_schema_path[0], []).append(sub)
    for errs in branches.values():
        if not any(list(e.relative_path) == ["type"] and e.validator == "const" for e in errs):
            return errs
    return None


def _diagnose(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    inst = err.instance
    if err.validator == "oneOf" and isinstance(inst, dict) and "type" in inst:
        errs = _branch_for_tag(err)
        if errs is None:
            tags = sorted({b["properties"]["type"]["const"] for b in err.schema["oneOf"]
                           if "type" in b.get("properties", {})})
            return f"config field '{where}': unknown type {inst['type']!r}; expected one of {tags}"
        return _diagnose(errs[0])
    if err.context:
        return _diagnose(jsonschema.exceptions.best_match(err.context))
    return f"config field '{where}': {err.message}"


def validate_config(cfg: Dict[str, Any]) -> Dict[str, Any]:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(_diagnose(err)) from None
    return cfg


def load_config(path) -> Dict[str, Any]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"{p}: invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}") from None
    return validate_config(cfg)


def build_bfree(desc: Dict[str, Any]) -> BFreeSet:
    kind = desc["type"]
    if kind == "squarefree":
        return BFreeSet.squarefree()
    if kind == "kfree":
        return BFreeSet.kfree(desc["k"])
    return BFreeSet.explicit(desc["generators"])


def build_substitution(desc: Dict[str, Any]) -> Substitution:
    if "images" in desc:
        sub = Substitution(tuple(tuple(im) for im in desc["images"]), desc.get("seed", 0),
                           desc.get("name", "custom"))
    elif "name" in desc:
        sub = named_substitution(desc["name"])
    else:
        raise ConfigError("substitution needs 'name' or 'images'")
    sub.validate()
    return sub


def build_source(desc: Dict[str, Any]):
    kind = desc["type"]
    if kind == "substitution":
        return SubstitutionSource(build_substitution(desc))
    if kind == "bfree":
        return BFreeSource(build_bfree(desc["set"]))
    if kind == "bernoulli":
        return BernoulliSource(tuple(desc["p"]), desc["seed"])
    if kind == "markov":
        return MarkovSource(tuple(tuple(r) for r in desc["P"]), desc["seed"])
    if kind == "explicit":
        return ExplicitSource(desc["word"])
    return CounterexampleSource()


def _vector(x) -> np.ndarray:
    a = np.array([complex(e[0], e[1]) if isinstance(e, list) else float(e) for e in x])
    return a.real.astype(float) if np.all(a.imag == 0) else a


def _matrix_value(x) -> np.ndarray:
    rows = [_vector(r) for r in x]
    if len({r.size for r in rows}) != 1:
        raise ConfigError("matrix rows have different lengths")
    return np.array(rows)


def build_family(desc: Dict[str, Any], alphabet_size: Optional[int] = None) -> MatrixFamily:
    if "random" in desc:
        r = desc["random"]
        m = r.get("m", alphabet_size or 2)
        return random_positive_family(r["d"], m, r["seed"])
    a0 = desc["A0"]
    others = [_matrix_value(A) for A in desc["others"]]
    if isinstance(a0, dict):
        A0 = RankOneMatrix(_vector(a0["u"]), _vector(a0["v"]))
    else:
        A0 = RankOneMatrix.from_dense(_matrix_value(a0))
    return MatrixFamily(A0, others)


def build_potential(x) -> PotentialSpec:
    return PotentialSpec(_matrix_value(x))


def build_grid(g) -> Optional[np.ndarray]:
    if g is None:
        return None
    if isinstance(g, dict):
        return np.linspace(g["min"], g["max"], g["points"])
    return np.asarray(g, dtype=float)
