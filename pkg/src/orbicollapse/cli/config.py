"""Run configuration: a versioned JSON document checked by JSON Schema."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import jsonschema
import numpy as np

SCHEMA_VERSION = 1
EXPERIMENTS = ("spectrum", "collapse", "continuity", "smooth-approx", "validate")

_GEOMETRY = {
    "type": "object",
    "required": ["kind"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["torus", "pillowcase", "spindle", "sphere"]},
        "side": {"type": "number", "exclusiveMinimum": 0},
        "h": {"type": "number", "exclusiveMinimum": 0},
        "grading": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "m": {"type": "integer", "minimum": 1},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "flat_pole": {"type": "boolean"},
        "point": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    },
    "allOf": [{"if": {"properties": {"kind": {"const": "spindle"}}},
               "then": {"required": ["m"]}}],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "experiment", "O1"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "O1": _GEOMETRY,
        "O2": _GEOMETRY,
        "eps": {"type": "array", "minItems": 1,
                "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "k": {"type": "integer", "minimum": 1},
        "k_boundary": {"type": "integer", "minimum": 8},
        "widths": {"type": "array", "minItems": 1,
                   "items": {"type": "number", "minimum": 0}},
        "trials": {"type": "integer", "minimum": 1},
        "rho": {"type": "number", "exclusiveMinimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eigen": {"type": "number", "exclusiveMinimum": 0},
                "oracle_rel": {"type": "number", "exclusiveMinimum": 0},
                "gap_slack": {"type": "number", "minimum": 0},
                "final_rel": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
    },
    "allOf": [
        {"if": {"properties": {"experiment": {"enum": ["collapse", "smooth-approx"]}}},
         "then": {"required": ["O2", "eps"]}},
        {"if": {"properties": {"experiment": {"const": "smooth-approx"}}},
         "then": {"required": ["widths"]}},
    ],
}

DEFAULTS = {
    "k": 6,
    "k_boundary": 32,
    "trials": 200,
    "rho": 0.1,
    "seed": 0,
    "threads": 1,
    "out": "out",
    "tolerances": {"eigen": 1e-8, "oracle_rel": 0.02, "gap_slack": 0.10, "final_rel": 0.10},
}


class ConfigError(ValueError):
    """Schema or semantic violation; ``where`` names the line or field."""

    def __init__(self, where: str, reason: str):
        super().__init__(f"{where}: {reason}")
        self.where = where
        self.reason = reason


@dataclass(frozen=True)
class RunConfig:
    """A validated configuration with defaults filled in."""

    data: dict

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    @property
    def experiment(self) -> str:
        return self.data["experiment"]

    @property
    def tolerances(self) -> dict:
        return self.data["tolerances"]


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse, validate and complete a configuration document.

    Raises
    ------
    ConfigError
        With the line/column of a JSON syntax error, or the field path of a
        schema violation.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"line {err.lineno} column {err.colno}", err.msg) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "(root)"
        raise ConfigError(f"field {path}", err.message)
    data = copy.deepcopy(DEFAULTS)
    tol = dict(data["tolerances"])
    tol.update(raw.get("tolerances", {}))
    data.update(raw)
    data["tolerances"] = tol
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    eps = data.get("eps")
    if eps is not None and np.any(np.diff(eps) >= 0):
        raise ConfigError("field eps", "values must be strictly decreasing")
    widths = data.get("widths")
    if widths is not None and np.any(np.diff(widths) >= 0):
        raise ConfigError("field widths", "values must be strictly decreasing")
    return RunConfig(data)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError("file", f"cannot read {path}: {err.strerror}") from None
    return parse_config(text, overrides)
