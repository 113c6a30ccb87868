"""Run configuration: JSON files validated against a versioned schema.

Material parameters are given as dimensionless groups normalized by a
reference modulus ``mu`` and length ``length``::

    gamma = gamma_t * mu * length      alpha = alpha_t * mu * length
    eta   = eta_t   * mu * length      beta  = beta_t  * mu * length
    kappa = kappa_t * mu

``stretch`` scales the prescribed axial coordinate of boundary sets marked
``"stretch": true``. A run is a list of phases, each sweeping one of these
keys through a list of values while the others keep their latest value.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional

import jsonschema

from .errors import InputError
from .solver import SolverConfig

SCHEMA_VERSION = 1

PARAM_KEYS = ("gamma_t", "alpha_t", "eta_t", "beta_t", "kappa_t", "stretch")

_solver_props = {
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "max_iter": {"type": "integer", "minimum": 1},
    "stability": {"enum": ["ldlt_inertia", "smallest_eig"]},
    "eig_monitor": {"type": "boolean"},
    "deflation_shift": {"type": "number", "exclusiveMinimum": 0},
    "deflation_power": {"type": "number", "exclusiveMinimum": 0},
    "line_search_tol": {"type": "number", "exclusiveMinimum": 0},
    "line_search_max_iter": {"type": "integer", "minimum": 1},
    "branch_switch": {"type": "boolean"},
    "switch_max_iter": {"type": "integer", "minimum": 1},
    "switch_attempts": {"type": "integer", "minimum": 1},
    "refine_onset": {"type": "boolean"},
    "refine_rtol": {"type": "number", "exclusiveMinimum": 0},
    "max_substeps": {"type": "integer", "minimum": 0},
    "zero_pivot_tol": {"type": "number", "exclusiveMinimum": 0},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "name", "header", "geometry", "surface", "boundary", "phases"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "header": {
            "type": "object",
            "required": ["experiment", "discretization", "desk_scale"],
            "properties": {
                "experiment": {"type": "string"},
                "discretization": {"type": "string"},
                "desk_scale": {"type": "boolean"},
                "mapping": {"type": "string"},
            },
        },
        "geometry": {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["axisym-rect", "cylinder3d-quarter", "cube",
                                             "sphere-octant", "file"]}},
        },
        "reference": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"mu": {"type": "number", "exclusiveMinimum": 0},
                           "length": {"type": "number", "exclusiveMinimum": 0}},
        },
        "surface": {
            "type": "object",
            "required": ["model"],
            "additionalProperties": False,
            "properties": {
                "model": {"enum": ["fluid", "isopoly", "ogden", "aniso", "none"]},
                "ogden_terms": {"type": "array",
                                "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                          "items": {"type": "number"}}},
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "minimum": 0} for k in PARAM_KEYS},
        },
        "boundary": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["set", "components"],
                "additionalProperties": False,
                "properties": {
                    "set": {"type": "string"},
                    "components": {"type": "array", "minItems": 1,
                                   "items": {"type": "integer", "minimum": 0, "maximum": 2}},
                    "stretch": {"type": "boolean"},
                },
            },
        },
        "phases": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["control", "values"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "control": {"enum": list(PARAM_KEYS)},
                    "values": {"type": "array", "items": {"type": "number", "minimum": 0}},
                    "also": {"type": "object",
                             "additionalProperties": {"type": "array", "items": {"type": "number"}}},
                },
            },
        },
        "solver": {"type": "object", "additionalProperties": False, "properties": _solver_props},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "vtk": {"type": "boolean"},
                "vtk_every": {"type": "integer", "minimum": 1},
                "csv": {"type": "boolean"},
            },
        },
    },
}


class ConfigError(InputError):
    """Schema or syntax violation; ``diagnostics`` lists ``(location, message)`` pairs."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


@dataclass
class BoundarySpec:
    set: str
    components: List[int]
    stretch: bool = False


@dataclass
class Phase:
    control: str
    values: List[float]
    name: str = ""
    also: Dict[str, List[float]] = field(default_factory=dict)

    def steps(self, start: Dict[str, float]) -> List[Dict[str, float]]:
        out, cur = [], dict(start)
        for i, v in enumerate(self.values):
            cur = dict(cur)
            cur[self.control] = float(v)
            for k, vals in self.also.items():
                cur[k] = float(vals[i])
            out.append(cur)
        return out


@dataclass
class OutputConfig:
    dir: str = "out"
    vtk: bool = True
    vtk_every: int = 1
    csv: bool = True


@dataclass
class RunConfig:
    name: str
    header: dict
    geometry: dict
    surface_model: str
    boundary: List[BoundarySpec]
    phases: List[Phase]
    mu: float = 1.0
    length: float = 1.0
    ogden_terms: Optional[List[List[float]]] = None
    params: Dict[str, float] = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    source: Optional[str] = None

    def initial_params(self) -> Dict[str, float]:
        p = {k: 0.0 for k in PARAM_KEYS}
        p["stretch"] = 1.0
        p.update(self.params)
        return p


def validate(data) -> None:
    """Raise :class:`ConfigError` listing every schema violation."""
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(data), key=lambda e: list(e.absolute_path))
    diag = [("/".join(str(p) for p in e.absolute_path) or "<root>", e.message) for e in errs]
    for i, ph in enumerate(data.get("phases", []) if isinstance(data, dict) else []):
        vals = ph.get("values", []) if isinstance(ph, dict) else []
        if all(isinstance(x, (int, float)) for x in vals):
            d = [b - a for a, b in zip(vals, vals[1:])]
            if d and not (all(x > 0 for x in d) or all(x < 0 for x in d)):
                diag.append((f"phases/{i}/values", "schedule must be strictly monotone"))
            for k, extra in (ph.get("also") or {}).items():
                if isinstance(extra, list) and len(extra) != len(vals):
                    diag.append((f"phases/{i}/also/{k}", "length differs from values"))
    if diag:
        lines = "\n".join(f"  {loc}: {msg}" for loc, msg in diag)
        raise ConfigError(f"invalid configuration:\n{lines}", diag)


def from_dict(data: dict, source: Optional[str] = None) -> RunConfig:
    validate(data)
    ref = data.get("reference", {})
    known = {f.name for f in fields(SolverConfig)}
    solver = SolverConfig(**{k: v for k, v in data.get("solver", {}).items() if k in known})
    return RunConfig(
        name=data["name"], header=data["header"], geometry=dict(data["geometry"]),
        surface_model=data["surface"]["model"], ogden_terms=data["surface"].get("ogden_terms"),
        boundary=[BoundarySpec(**b) for b in data["boundary"]],
        phases=[Phase(p["control"], list(p["values"]), p.get("name", ""), p.get("also", {}))
                for p in data["phases"]],
        mu=ref.get("mu", 1.0), length=ref.get("length", 1.0), params=dict(data.get("params", {})),
        solver=solver, output=OutputConfig(**data.get("output", {})), source=source)


def load(path) -> RunConfig:
    """Parse and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", [(str(path), str(exc))]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        loc = f"line {exc.lineno}, column {exc.colno}"
        raise ConfigError(f"{path}: JSON syntax error at {loc}: {exc.msg}", [(loc, exc.msg)]) from None
    return from_dict(data, str(path))
