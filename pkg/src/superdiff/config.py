"""Experiment configuration: JSON schema, defaults and lattice/program construction."""
from __future__ import annotations

import copy
import hashlib
import json
from typing import Any

import jsonschema

from .lattice import LatticeSpec, RungStyle, build_folded_chain, build_scattering_geometry, folded_rung
from .model import FloquetSchedule, InteractionVector, TrotterProgram, compile_program

REFERENCE_LAMBDA = "0,0,0"
HEADLINE_LAMBDAS = [REFERENCE_LAMBDA, "1,1,1", "1,1,0", "0,0,1", "1,0,1", "1,0,0"]

_vec = {
    "oneOf": [
        {"type": "string", "pattern": r"^\s*[\(\[]?\s*-?[0-9.eE+-]+\s*(,\s*-?[0-9.eE+-]+\s*){2}[\)\]]?\s*$"},
        {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
    ]
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "superdiff experiment",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["folded", "scattering"]},
                "chain_len": {"type": "integer", "minimum": 4},
                "rungs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "distance": {"type": "integer", "minimum": 0},
                            "sites": {"type": "array", "items": {"type": "integer"},
                                      "minItems": 2, "maxItems": 2},
                        },
                    },
                },
                "rung_style": {"enum": [s.value for s in RungStyle]},
                "probe": {"type": "integer", "minimum": 0},
                "attach_1": {"type": ["integer", "null"]},
                "attach_2": {"type": ["integer", "null"]},
            },
        },
        "physics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "J": {"type": "number"},
                "ratio": {"type": "number", "minimum": 0},
                "lambdas": {"type": "array", "items": _vec, "minItems": 1},
                "tau": {"type": "number", "exclusiveMinimum": 0},
                "steps": {"type": "integer", "minimum": 1},
            },
        },
        "protocol": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "axis": {"enum": ["X", "Y", "Z", "x", "y", "z"]},
                "cycles": {"type": "integer", "minimum": 0},
                "realizations": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "threads": {"type": ["integer", "null"], "minimum": 1},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "window": {"type": ["array", "null"], "items": {"type": "integer"},
                           "minItems": 2, "maxItems": 2},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
                "first_slope_step": {"type": ["integer", "null"], "minimum": 1},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": ["string", "null"]},
                "profile": {"type": "boolean"},
            },
        },
        "limits": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_qubits": {"type": "integer", "minimum": 2},
            },
        },
    },
}

# Defaults: 19-site folded chain + one mid-site rung 4 sites from the probe
# (20 qubits), tau = 1, c = 9, J_perp/J = 1, N = 20. Running averages skip
# the single-step slope t=1 -> 2, which is a transient shared by every run.
DEFAULTS: dict[str, Any] = {
    "geometry": {
        "kind": "folded",
        "chain_len": 19,
        "rungs": [{"distance": 4}],
        "rung_style": "mid_site",
        "probe": 0,
        "attach_1": None,
        "attach_2": None,
    },
    "physics": {"J": 1.0, "ratio": 1.0, "lambdas": list(HEADLINE_LAMBDAS), "tau": 1.0, "steps": 20},
    "protocol": {"axis": "Z", "cycles": 9, "realizations": 30, "seed": 0, "threads": None},
    "analysis": {"window": None, "tolerance": 0.07, "first_slope_step": 2},
    "output": {"directory": None, "profile": False},
    "limits": {"max_qubits": 24},
}


class ConfigError(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    pass


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(data: dict | None = None, overrides: dict | None = None) -> dict:
    """Validate a raw config, fill defaults and apply flag overrides (flag > file > default)."""
    data = {} if data is None else data
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{'/'.join(map(str, exc.absolute_path)) or '<root>'}: {exc.message}") from None
    cfg = merge(DEFAULTS, data)
    if overrides:
        cfg = merge(cfg, overrides)
        try:
            jsonschema.validate(cfg, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"{'/'.join(map(str, exc.absolute_path))}: {exc.message}") from None
    cfg["physics"]["lambdas"] = [InteractionVector.parse(v).label() for v in cfg["physics"]["lambdas"]]
    build_lattice(cfg)  # surface geometry errors early
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def build_lattice(cfg: dict) -> LatticeSpec:
    geo = cfg["geometry"]
    try:
        if geo["kind"] == "scattering":
            return build_scattering_geometry(geo["chain_len"], geo["attach_1"], geo["attach_2"])
        rungs = []
        for r in geo["rungs"]:
            if "sites" in r:
                rungs.append(tuple(r["sites"]))
            elif "distance" in r:
                rungs.append(folded_rung(geo["chain_len"], r["distance"]))
            else:
                raise ConfigError("each rung needs 'distance' or 'sites'")
        return build_folded_chain(geo["chain_len"], rungs, geo["rung_style"], geo["probe"])
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"geometry: {exc}") from None


def check_limits(cfg: dict, lattice: LatticeSpec) -> None:
    cap = cfg["limits"]["max_qubits"]
    if lattice.n > cap:
        need = 16 * 2 ** lattice.n
        raise ResourceLimitError(
            f"{lattice.n} qubits exceeds the configured cap of {cap} "
            f"(statevector needs {need / 2**20:.0f} MiB; cap allows {16 * 2**cap / 2**20:.0f} MiB)"
        )


def build_program(
    cfg: dict,
    lattice: LatticeSpec,
    lam,
    ratio: float | None = None,
    tau: float | None = None,
    steps: int | None = None,
) -> TrotterProgram:
    phys = cfg["physics"]
    J = float(phys["J"])
    ratio = float(phys["ratio"] if ratio is None else ratio)
    sched = FloquetSchedule(
        tau=float(phys["tau"] if tau is None else tau),
        steps=int(phys["steps"] if steps is None else steps),
    )
    return compile_program(lattice, sched, J, ratio * J, InteractionVector.parse(lam))
