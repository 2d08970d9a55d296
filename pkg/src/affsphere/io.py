"""Manifest parsing and deterministic JSON output."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .errors import ManifestError

BUILTIN_TOL = 1e-6
TOL_ENV = "AFFSPHERE_TOL"
DEFAULT_COUNT = 5
DEFAULT_SEED = 0

_SPEC_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "flat"},
                "dim": {"type": "integer", "minimum": 1},
                "c0": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "dim", "c0"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "quadric"},
                "dim": {"type": "integer", "minimum": 1},
            },
            "required": ["kind", "dim"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "composition"},
                "points": {"type": "integer", "minimum": 0},
                "constants": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "factors": {"type": "array", "items": {"$ref": "#/$defs/spec"}},
            },
            "required": ["kind", "points", "constants"],
            "additionalProperties": False,
        },
    ]
}

MANIFEST_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"spec": _SPEC_SCHEMA},
    "type": "object",
    "properties": {
        "version": {"type": "integer", "minimum": 1},
        "spec": {"$ref": "#/$defs/spec"},
        "evaluation": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {
                        "points": {"type": "array", "minItems": 1,
                                   "items": {"type": "array", "items": {"type": "number"}}},
                    },
                    "required": ["points"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "sampler": {
                            "type": "object",
                            "properties": {
                                "count": {"type": "integer", "minimum": 1},
                                "seed": {"type": "integer", "minimum": 0},
                                "box": {"oneOf": [
                                    {"type": "number", "exclusiveMinimum": 0},
                                    {"type": "array", "items": {"type": "number"},
                                     "minItems": 2, "maxItems": 2},
                                ]},
                            },
                            "required": ["count", "seed"],
                            "additionalProperties": False,
                        }
                    },
                    "required": ["sampler"],
                    "additionalProperties": False,
                },
            ]
        },
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
    },
    "required": ["version", "spec"],
    "additionalProperties": False,
}


def default_tolerance() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return BUILTIN_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise ManifestError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not tol > 0:
        raise ManifestError(f"{TOL_ENV} must be positive, got {raw}")
    return tol


@dataclass
class Manifest:
    version: int
    spec_dict: dict
    points: list | None = None
    count: int = DEFAULT_COUNT
    seed: int = DEFAULT_SEED
    box: object = 1.0
    tolerances: dict = field(default_factory=dict)

    @property
    def spec(self):
        from .catalog import spec_from_dict

        return spec_from_dict(self.spec_dict)

    def tolerance(self, name: str = "default", override: float | None = None) -> float:
        if override is not None:
            return float(override)
        if name in self.tolerances:
            return float(self.tolerances[name])
        return float(self.tolerances.get("default", default_tolerance()))

    def sample_points(self, count: int | None = None, seed: int | None = None) -> np.ndarray:
        """Explicit points, or seeded uniform points in the box."""
        spec = self.spec
        if self.points is not None and count is None and seed is None:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != spec.dim:
                raise ManifestError(f"evaluation points must have {spec.dim} coordinates each")
            return pts
        box = self.box
        lo, hi = (-float(box), float(box)) if np.isscalar(box) else (float(box[0]), float(box[1]))
        if not lo < hi:
            raise ManifestError(f"empty sampling box [{lo}, {hi}]")
        rng = np.random.default_rng(self.seed if seed is None else seed)
        return rng.uniform(lo, hi, size=(self.count if count is None else count, spec.dim))


def _check_constants(d: dict, path: str = "spec"):
    if d.get("kind") != "composition":
        return
    factors = d.get("factors", [])
    if len(d["constants"]) != d["points"] + len(factors):
        raise ManifestError(
            f"{path}: {len(d['constants'])} constants given, r + s = {d['points'] + len(factors)}")
    for i, f in enumerate(factors):
        _check_constants(f, f"{path}.factors[{i}]")


def parse_manifest(obj) -> Manifest:
    """Validate a manifest object; a bare spec object is wrapped as version 1."""
    if isinstance(obj, dict) and "kind" in obj and "spec" not in obj:
        obj = {"version": 1, "spec": obj}
    try:
        jsonschema.validate(obj, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ManifestError(f"invalid manifest at {loc}: {exc.message}") from None
    _check_constants(obj["spec"])
    m = Manifest(version=obj["version"], spec_dict=obj["spec"], tolerances=dict(obj.get("tolerances", {})))
    ev = obj.get("evaluation")
    if ev is not None:
        if "points" in ev:
            m.points = ev["points"]
        else:
            smp = ev["sampler"]
            m.count, m.seed, m.box = smp["count"], smp["seed"], smp.get("box", 1.0)
    m.spec  # build once so spec errors surface here
    return m


def load_manifest(path) -> Manifest:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ManifestError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path} is not valid JSON: {exc}") from None
    return parse_manifest(obj)


# ---------------------------------------------------------------------------
# deterministic JSON


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"
