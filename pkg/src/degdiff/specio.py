"""JSON spec documents for weights and diffusion fields, plus report I/O.

Weight specs look like {"kind": "power", "alpha": 1.0, "dim": 3}; field
specs like {"kind": "isotropic_power", "alpha": 1.0, "dim": 3} or
{"kind": "power_times_const_spd", "alpha": ..., "dim": ..., "matrix":
[[...]]}.  Exponential weights name a registered scalar field, e.g.
{"name": "sin_sum", "amplitude": 0.5}; arbitrary callables enter through
the registry, not through JSON.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Callable

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .errors import SpecError
from .forms import (DiffusionField, custom_field, exponential_field,
                    isotropic_power_field, power_spd_field)
from .weights import Weight, custom_weight, exponential_weight, power_weight

PHI_SCHEMA = {
    "type": "object",
    "required": ["name"],
    "properties": {"name": {"type": "string"}},
}

WEIGHT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind", "dim"],
    "properties": {
        "kind": {"enum": ["power", "exponential", "custom"]},
        "dim": {"type": "integer", "minimum": 2},
        "alpha": {"type": "number"},
        "phi": PHI_SCHEMA,
        "registry": {"type": "string"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "power"}}},
         "then": {"required": ["alpha"]}},
        {"if": {"properties": {"kind": {"const": "exponential"}}},
         "then": {"required": ["phi"]}},
        {"if": {"properties": {"kind": {"const": "custom"}}},
         "then": {"required": ["registry"]}},
    ],
}

FIELD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["isotropic_power", "power_times_const_spd",
                          "exponential", "custom"]},
        "dim": {"type": "integer", "minimum": 2},
        "alpha": {"type": "number"},
        "matrix": {"type": "array",
                   "items": {"type": "array", "items": {"type": "number"}}},
        "phi": PHI_SCHEMA,
        "registry": {"type": "string"},
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "isotropic_power"}}},
         "then": {"required": ["alpha", "dim"]}},
        {"if": {"properties": {"kind": {"const": "power_times_const_spd"}}},
         "then": {"required": ["alpha", "dim", "matrix"]}},
        {"if": {"properties": {"kind": {"const": "exponential"}}},
         "then": {"required": ["phi", "dim"]}},
        {"if": {"properties": {"kind": {"const": "custom"}}},
         "then": {"required": ["registry"]}},
    ],
}

# callable registries for specs that JSON cannot carry
WEIGHT_REGISTRY: dict[str, Weight] = {}
FIELD_REGISTRY: dict[str, DiffusionField] = {}


def register_weight(name: str, weight: Weight) -> None:
    WEIGHT_REGISTRY[name] = weight


def register_field(name: str, field: DiffusionField) -> None:
    FIELD_REGISTRY[name] = field


def _validate(doc: dict, schema: dict, what: str) -> None:
    errors = sorted(Draft202012Validator(schema).iter_errors(doc),
                    key=lambda e: list(e.absolute_path))
    if errors:
        err = best_match(errors)
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        raise SpecError(f"invalid {what} spec at {pointer}: {err.message}",
                        pointer=pointer)


def make_phi(spec: dict) -> tuple[Callable, Callable, str]:
    """Build (phi, grad_phi, label) from a named phi spec."""
    name = spec.get("name")
    if name == "linear":
        v = np.asarray(spec.get("vector", []), dtype=float)
        if v.ndim != 1 or len(v) == 0:
            raise SpecError("linear phi needs a nonempty 'vector'",
                            pointer="/phi/vector")

        def phi(x):
            return np.atleast_2d(x) @ v

        def grad(x):
            return np.tile(v, (np.atleast_2d(x).shape[0], 1))

        return phi, grad, f"linear{v.tolist()}"
    if name == "log_norm":
        beta = float(spec.get("beta", 1.0))

        def phi(x):
            return beta * np.log(np.linalg.norm(np.atleast_2d(x), axis=1))

        def grad(x):
            pts = np.atleast_2d(x)
            r2 = np.sum(pts * pts, axis=1)
            return beta * pts / r2[:, None]

        return phi, grad, f"log_norm(beta={beta})"
    if name == "sin_sum":
        a = float(spec.get("amplitude", 1.0))

        def phi(x):
            return a * np.sum(np.sin(np.atleast_2d(x)), axis=1)

        def grad(x):
            return a * np.cos(np.atleast_2d(x))

        return phi, grad, f"sin_sum(a={a})"
    raise SpecError(f"unknown phi name {name!r}", pointer="/phi/name")


def parse_weight(doc: dict) -> Weight:
    _validate(doc, WEIGHT_SCHEMA, "weight")
    kind = doc["kind"]
    if kind == "power":
        try:
            return power_weight(doc["alpha"], doc["dim"])
        except ValueError as exc:
            raise SpecError(str(exc), pointer="/alpha") from exc
    if kind == "exponential":
        phi, _, label = make_phi(doc["phi"])
        return exponential_weight(phi, doc["dim"], label=f"e^{label}")
    name = doc["registry"]
    if name not in WEIGHT_REGISTRY:
        raise SpecError(f"weight {name!r} is not registered",
                        pointer="/registry")
    return WEIGHT_REGISTRY[name]


def parse_field(doc: dict) -> DiffusionField:
    _validate(doc, FIELD_SCHEMA, "field")
    kind = doc["kind"]
    if kind == "isotropic_power":
        try:
            return isotropic_power_field(doc["alpha"], doc["dim"])
        except ValueError as exc:
            raise SpecError(str(exc), pointer="/alpha") from exc
    if kind == "power_times_const_spd":
        m = np.asarray(doc["matrix"], dtype=float)
        if m.shape != (doc["dim"], doc["dim"]):
            raise SpecError("matrix shape must be dim x dim",
                            pointer="/matrix")
        return power_spd_field(doc["alpha"], doc["dim"], m)
    if kind == "exponential":
        phi, grad, label = make_phi(doc["phi"])
        return exponential_field(phi, grad, doc["dim"], label=label)
    name = doc["registry"]
    if name not in FIELD_REGISTRY:
        raise SpecError(f"field {name!r} is not registered",
                        pointer="/registry")
    return FIELD_REGISTRY[name]


def load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path} is not valid JSON: {exc}", pointer="/") from exc


class _NumpyEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.bool_,)):
            return bool(obj)
        return super().default(obj)


def write_json_atomic(doc: dict, path: str) -> None:
    """Serialize to a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, cls=_NumpyEncoder)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def spec_digest(doc) -> str:
    blob = json.dumps(doc, sort_keys=True, cls=_NumpyEncoder).encode()
    return hashlib.sha256(blob).hexdigest()


def run_manifest(args_doc: dict, seed) -> dict:
    import scipy

    from . import __version__

    return {
        "spec_hash": spec_digest(args_doc),
        "parameters": args_doc,
        "seed": seed,
        "versions": {
            "degdiff": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
