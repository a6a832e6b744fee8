"""Scenario configs: JSON schema, loading and CLI overrides."""
from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

import jsonschema

from ..errors import ConfigInvalid

__all__ = ["SCENARIO_SCHEMA", "load_config", "validate_config", "apply_overrides",
           "bundled_scenarios", "resolve_config_path"]

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_vec = {"type": "array", "items": _num, "minItems": 1}
_int_pos = {"type": "integer", "minimum": 1}
_dims = {"type": "array", "items": _int_pos, "minItems": 1}

_measure = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["eigenvalues"],
         "properties": {"eigenvalues": _vec, "tail_trace": {"type": "number", "minimum": 0}}},
        {"type": "object", "additionalProperties": False, "required": ["generator", "n"],
         "properties": {"generator": {"enum": ["inverse_pi_sq"]}, "n": _int_pos}},
    ]
}

_band = {"band_delta": _pos}
_domain = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["tag", "b", "c"],
         "properties": {"tag": {"const": "half_space"}, "b": _vec, "c": _num, **_band}},
        {"type": "object", "additionalProperties": False, "required": ["tag", "b", "c"],
         "properties": {"tag": {"const": "slab"}, "b": _vec, "c": _pos, **_band}},
        {"type": "object", "additionalProperties": False, "required": ["tag", "center", "radius"],
         "properties": {"tag": {"const": "sphere"}, "center": _vec, "radius": _pos, **_band}},
        {"type": "object", "additionalProperties": False, "required": ["tag", "t", "center", "radius"],
         "properties": {"tag": {"const": "ellipsoid"}, "t": _vec, "center": _vec, "radius": _pos,
                        **_band}},
        {"type": "object", "additionalProperties": False, "required": ["tag", "k", "phi"],
         "properties": {"tag": {"const": "graph"}, "k": _int_pos, **_band,
                        "phi": {"type": "object", "additionalProperties": False,
                                "properties": {"c": _num, "m": _vec,
                                               "P": {"type": "array", "items": _vec}}}}},
        {"type": "object", "additionalProperties": False, "required": ["tag", "g_1d", "r"],
         "properties": {"tag": {"const": "integral_functional"}, "r": _num, **_band,
                        "g_1d": {"type": "object", "additionalProperties": False,
                                 "required": ["numerator"],
                                 "properties": {"numerator": _vec, "denominator": _vec}},
                        "hypotheses": {"type": "object", "additionalProperties": False,
                                       "required": ["a", "alpha", "beta"],
                                       "properties": {"a": _pos, "alpha": _num, "beta": _num}}}},
        {"type": "object", "additionalProperties": False, "required": ["tag"],
         "properties": {"tag": {"const": "whole_space"}}},
    ]
}

_source = {
    "oneOf": [
        _num,
        {"type": "object", "additionalProperties": False, "required": ["kind"],
         "properties": {"kind": {"const": "constant"}, "value": _num}},
        {"type": "object", "additionalProperties": False, "required": ["kind"],
         "properties": {"kind": {"const": "bump"}, "center": _vec, "radius": _pos,
                        "amplitude": _num}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "coefficients"],
         "properties": {"kind": {"const": "linear"}, "coefficients": _vec}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "seed"],
         "properties": {"kind": {"const": "random"}, "seed": {"type": "integer", "minimum": 0},
                        "terms": _int_pos, "scale": _pos, "count": _int_pos}},
    ]
}

_sampler = {
    "type": "object", "additionalProperties": False,
    "properties": {"n_starts": _int_pos, "ascent_iters": {"type": "integer", "minimum": 0},
                   "ascent_starts": {"type": "integer", "minimum": 0}, "fd_step": _pos,
                   "box_halfwidth": _pos, "seed": {"type": "integer", "minimum": 0}},
}

_paths = {
    "type": "object", "additionalProperties": False,
    "properties": {"h": _pos, "T_max": _pos, "paths": _int_pos, "bridge": {"type": "boolean"},
                   "block": _int_pos, "crn": {"type": "boolean"}},
}

_grid = {
    "resolution": {"oneOf": [_int_pos, {"type": "array", "items": _int_pos}]},
    "box_halfwidth": _pos,
    "scheme": {"enum": ["cut_cell", "mask"]},
}

_ref = {"measure": {"type": "string"}, "domain": {"type": "string"}}
_common = {"id": {"type": "string"}, "n": _int_pos, **_ref}
_tol = {"type": "number", "minimum": 0}

_tasks = {
    "curvature": {
        "required": ["measure", "domain"],
        "properties": {**_common, "sampler": _sampler, "expect_C_max": _num,
                       "expect_admissibility": {"enum": ["admissible", "inadmissible", "undetermined"]},
                       "tolerance": _tol},
    },
    "solve": {
        "required": ["measure", "domain", "lambdas", "sources"],
        "properties": {**_common, **_grid, "lambdas": {"type": "array", "items": _pos, "minItems": 1},
                       "sources": {"type": "array", "items": _source, "minItems": 1},
                       "checks": {"type": "array", "items": {"enum": [
                           "energy", "apriori", "w22", "trace", "boundary_identity"]}},
                       "sampler": _sampler, "tolerance": _tol, "export": {"type": "boolean"}},
    },
    "boundary_identity": {
        "required": ["measure", "domain", "resolutions", "source"],
        "properties": {**_common, "resolutions": {"type": "array", "items": _int_pos, "minItems": 2},
                       "source": _source, "lambda": _pos, "min_ratio": _pos,
                       "box_halfwidth": _pos},
    },
    "mc": {
        "required": ["measure", "domain", "source", "probes"],
        "properties": {**_common, "lambda": _pos, "source": _source, "paths": _paths,
                       "probes": {"type": "array", "items": _vec, "minItems": 1},
                       "t": _pos, "expect": _num, "tolerance": _tol},
    },
    "sweep": {
        "required": ["measure", "domain", "dims", "columns"],
        "properties": {**_ref, "id": {"type": "string"}, "dims": _dims,
                       "columns": {"type": "array", "items": {"enum": [
                           "witness", "curvature", "w22", "mc"]}},
                       "sampler": _sampler, "lambda": _pos, "source": _source, "paths": _paths,
                       "probe": _vec, **_grid,
                       "expect": {"type": "object", "additionalProperties": False, "properties": {
                           "C_max": _num, "C_constant": _num, "witness_increasing_from": _int_pos,
                           "witness_min_at_end": _num,
                           "witness_at": {"type": "object", "additionalProperties": False,
                                          "required": ["n", "value", "tolerance"],
                                          "properties": {"n": _int_pos, "value": _num,
                                                         "tolerance": _tol,
                                                         "relative_to": _pos}}}}},
    },
    "crosscheck": {
        "required": ["measure", "domain", "lambda", "source", "probes"],
        "properties": {**_common, **_grid, "lambda": _pos, "source": _source, "paths": _paths,
                       "probes": {"type": "array", "items": _vec, "minItems": 1},
                       "grid_tolerance": _tol},
    },
    "kernel": {
        "required": ["measure", "T", "times"],
        "properties": {"id": {"type": "string"}, "measure": {"type": "string"}, "n": _int_pos,
                       "T": _pos, "times": {"type": "array", "items": _pos, "minItems": 1},
                       "paths": _paths, "max_deviation": _pos},
    },
    "convergence": {
        "required": ["measure", "domain", "dims", "lambda", "source", "probe"],
        "properties": {**_ref, "id": {"type": "string"}, "dims": _dims, "lambda": _pos,
                       "source": _source, "probe": _vec, "paths": _paths,
                       "control_domain": {"type": "string"}},
    },
    "integral_functional": {
        "required": ["measure", "domain"],
        "properties": {**_common, "samples": _int_pos, "tolerance": _tol,
                       "boundary_points": _int_pos},
    },
}


def _task_schema(kind, spec):
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["type", *spec["required"]],
        "properties": {"type": {"const": kind}, **spec["properties"]},
    }


SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "tasks"],
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "measures": {"type": "object", "additionalProperties": _measure},
        "domains": {"type": "object", "additionalProperties": _domain},
        "tasks": {"type": "array", "items": {"oneOf": [_task_schema(k, v) for k, v in _tasks.items()]}},
        "outputs": {"type": "object", "additionalProperties": False,
                    "properties": {"report": {"type": "string"}, "sweep": {"type": "string"}}},
    },
}


def validate_config(cfg: dict) -> dict:
    """Schema check plus cross references; returns ``cfg`` or raises ConfigInvalid."""
    try:
        jsonschema.validate(cfg, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigInvalid(f"{where}: {exc.message}") from None
    measures = cfg.get("measures", {})
    domains = cfg.get("domains", {})
    for i, task in enumerate(cfg["tasks"]):
        for key, pool in (("measure", measures), ("domain", domains), ("control_domain", domains)):
            if key in task and task[key] not in pool:
                raise ConfigInvalid(f"tasks/{i}: undefined {key} {task[key]!r}")
    return cfg


def bundled_scenarios() -> dict:
    """Name -> path of the scenarios shipped with the package."""
    root = resources.files("oulab.harness") / "scenarios"
    return {p.name[:-5]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda q: q.name)
            if p.name.endswith(".json")}


def resolve_config_path(ref) -> Path:
    """A filesystem path, or the name of a bundled scenario."""
    path = Path(ref)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    if str(ref) in bundled:
        return bundled[str(ref)]
    raise ConfigInvalid(f"no config file or bundled scenario named {ref!r}")


def load_config(ref) -> dict:
    path = resolve_config_path(ref)
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    return validate_config(cfg)


def apply_overrides(cfg: dict, seed=None, paths=None, resolution=None) -> dict:
    """Copy of ``cfg`` with CLI overrides applied to every matching task."""
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg["seed"] = int(seed)
    for task in cfg["tasks"]:
        if paths is not None and task["type"] in ("mc", "sweep", "crosscheck", "kernel", "convergence"):
            task.setdefault("paths", {})["paths"] = int(paths)
        if resolution is not None and task["type"] in ("solve", "crosscheck", "sweep"):
            task["resolution"] = int(resolution)
    return validate_config(cfg)
