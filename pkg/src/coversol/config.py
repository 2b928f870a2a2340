"""Run configuration: a JSON file checked against a strict schema.

Example::

    {
      "base": {"vertices": 1, "measure": [1],
               "edges": [{"u": 0, "v": 0, "weight": 1, "voltage": 1}]},
      "chain": {"kind": "cyclic", "depth": 3},
      "solver": {"mode": "dense"},
      "arithmetic": "float",
      "lambda_max": 40, "epsilon": 0.1,
      "out": "out", "cache": ".coversol-cache"
    }

Voltages are element literals of the deepest group of the chain: integers
for cyclic groups, 2x2 nested lists or the names "S", "T", "I", "-I" for
SL(2, Z/mZ), and image lists for permutation groups.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import jsonschema

from .groups import ELEMENT_CAP, DeckChain, chain_from_config
from .spectral import DENSE_CAP
from .tower import CoverTower, VoltageAssignment, WeightedGraph, build_tower

CACHE_ENV = "COVERSOL_CACHE"

_number = {"type": "number"}
_measure_value = {"anyOf": [{"type": "number", "exclusiveMinimum": 0},
                            {"type": "string", "pattern": r"^\s*\d+\s*(/\s*\d+\s*)?$"}]}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["base", "chain"],
    "properties": {
        "base": {
            "type": "object",
            "additionalProperties": False,
            "required": ["vertices", "edges"],
            "properties": {
                "vertices": {"type": "integer", "minimum": 1},
                "measure": {"type": "array", "items": _measure_value},
                "edges": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["u", "v", "voltage"],
                        "properties": {
                            "u": {"type": "integer", "minimum": 0},
                            "v": {"type": "integer", "minimum": 0},
                            "weight": {"type": "number", "exclusiveMinimum": 0},
                            "voltage": {},
                        },
                    },
                },
            },
        },
        "chain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "depth"],
            "properties": {
                "kind": {"enum": ["cyclic", "sl2", "permutation"]},
                "depth": {"type": "integer", "minimum": 1},
                "moduli": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "levels": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["degree", "generators"],
                        "properties": {
                            "degree": {"type": "integer", "minimum": 1, "maximum": 15},
                            "generators": {"type": "array",
                                           "items": {"type": "array",
                                                     "items": {"type": "integer", "minimum": 0}}},
                        },
                    },
                },
                "cap": {"type": "integer", "minimum": 1},
            },
        },
        "depth": {"type": "integer", "minimum": 1},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["dense", "iterative"]},
                "m": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "dense_cap": {"type": "integer", "minimum": 1, "maximum": DENSE_CAP},
            },
        },
        "arithmetic": {"enum": ["float", "rational"]},
        "lambda_max": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": "number", "exclusiveMinimum": 0},
        "out": {"type": "string"},
        "cache": {"type": "string"},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    depth: int
    mode: str = "dense"
    m: int = 10
    tol: float = 1e-10
    dense_cap: int = DENSE_CAP
    arithmetic: str = "float"
    lambda_max: float = 40.0
    epsilon: float = 0.1
    out: Path = Path("out")
    cache: Path = Path(".coversol-cache")

    @property
    def solver_key(self) -> dict:
        if self.mode == "dense":
            return {"mode": "dense"}
        return {"mode": "iterative", "m": self.m, "tol": self.tol}

    def digest_source(self) -> str:
        """Canonical text of everything that determines the tower."""
        return json.dumps({"base": self.raw["base"], "chain": self.raw["chain"],
                           "depth": self.depth}, sort_keys=True, separators=(",", ":"))


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) if isinstance(p, str) else f"[{p}]" for p in err.absolute_path]
    text = ""
    for p in parts:
        text += p if p.startswith("[") or not text else "." + p
    return text or "<root>"


def parse_config(text: str, source: str = "<config>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{source}: field {_field_path(e)}: {e.message}" for e in errors]
        raise ConfigError("\n".join(lines))
    base = data["base"]
    n = base["vertices"]
    for k, e in enumerate(base["edges"]):
        for end in ("u", "v"):
            if e[end] >= n:
                raise ConfigError(f"{source}: field base.edges[{k}].{end}: vertex {e[end]} "
                                  f"out of range for {n} vertices")
    if "measure" in base and len(base["measure"]) != n:
        raise ConfigError(f"{source}: field base.measure: expected {n} entries, "
                          f"got {len(base['measure'])}")
    return data


def load_config(path: str | os.PathLike, depth: int | None = None, mode: str | None = None,
                out: str | None = None, cache: str | None = None,
                lambda_max: float | None = None, epsilon: float | None = None) -> RunConfig:
    """Read and validate a config file, then apply command-line overrides.

    The cache directory is taken from ``cache``, else the COVERSOL_CACHE
    environment variable, else the config file.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    data = parse_config(text, str(path))
    solver = data.get("solver", {})
    cfg = RunConfig(
        raw=data,
        depth=data.get("depth", data["chain"]["depth"]),
        mode=solver.get("mode", "dense"),
        m=solver.get("m", 10),
        tol=float(solver.get("tol", 1e-10)),
        dense_cap=solver.get("dense_cap", DENSE_CAP),
        arithmetic=data.get("arithmetic", "float"),
        lambda_max=float(data.get("lambda_max", 40.0)),
        epsilon=float(data.get("epsilon", 0.1)),
        out=Path(data.get("out", "out")),
        cache=Path(data.get("cache", ".coversol-cache")),
    )
    updates: dict[str, Any] = {}
    if depth is not None:
        updates["depth"] = depth
    if mode is not None:
        updates["mode"] = mode
    if out is not None:
        updates["out"] = Path(out)
    env_cache = os.environ.get(CACHE_ENV)
    if cache is not None:
        updates["cache"] = Path(cache)
    elif env_cache:
        updates["cache"] = Path(env_cache)
    if lambda_max is not None:
        updates["lambda_max"] = lambda_max
    if epsilon is not None:
        updates["epsilon"] = epsilon
    cfg = replace(cfg, **updates)
    validate_run(cfg)
    return cfg


def validate_run(cfg: RunConfig) -> None:
    if cfg.depth < 1:
        raise ConfigError("depth must be >= 1")
    if not cfg.lambda_max > 0:
        raise ConfigError("lambda_max must be > 0")
    if not cfg.epsilon > 0:
        raise ConfigError("epsilon must be > 0")
    chain = cfg.raw["chain"]
    listed = chain.get("moduli", chain.get("levels"))
    limit = len(listed) if listed is not None else None
    if limit is not None and cfg.depth > min(limit, chain["depth"]):
        raise ConfigError(f"depth {cfg.depth} exceeds the {min(limit, chain['depth'])} "
                          "levels the chain describes")


def config_chain(cfg: RunConfig) -> DeckChain:
    """Chain for the run.  Listed chains are built in full so voltages refer to a fixed top group."""
    spec = dict(cfg.raw["chain"])
    cap = spec.pop("cap", ELEMENT_CAP)
    if "moduli" not in spec and "levels" not in spec:
        spec["depth"] = cfg.depth
    try:
        return chain_from_config(spec, cap)
    except (ValueError, OverflowError) as exc:
        raise ConfigError(f"field chain: {exc}") from None


def config_tower(cfg: RunConfig) -> CoverTower:
    base = cfg.raw["base"]
    edges = [(e["u"], e["v"], e.get("weight", 1.0)) for e in base["edges"]]
    measure = base.get("measure")
    try:
        graph = WeightedGraph.from_lists(base["vertices"], edges, measure)
    except ValueError as exc:
        raise ConfigError(f"field base: {exc}") from None
    chain = config_chain(cfg)
    voltages = VoltageAssignment([e["voltage"] for e in base["edges"]])
    try:
        tower = build_tower(graph, voltages, chain)
    except ValueError as exc:
        raise ConfigError(f"field base.edges: {exc}") from None
    return tower.truncate(cfg.depth) if tower.depth > cfg.depth else tower
