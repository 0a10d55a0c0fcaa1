"""YAML run configurations: schema, loading and scenario construction."""
from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from .forcing import (BurstTrain, ExpBackground, ExponentialDecay, GeneralDecay, NoiseModel,
                      SinBackground, ZeroBackground)
from .semigroup import DiagonalSemigroup, MatrixSemigroup, ScalarSemigroup
from .solver import ModelParams, Scenario
from .sampling import SamplerSet
from .space import Space, SpaceElement, make_function, parse_expr


class ConfigError(ValueError):
    pass


_NUM = {"type": "number"}
_FUNC = {
    "description": "closed-form function on [0,1] ({sin: c}, {cos: c}, {poly: [c0, c1, ...]}, "
                   "{const: c} or a bare number), or a coefficient list for abstract spaces",
    "oneOf": [
        _NUM,
        {"type": "array", "items": _NUM, "minItems": 1},
        {"type": "object", "minProperties": 1, "maxProperties": 1, "additionalProperties": False,
         "properties": {"sin": _NUM, "cos": _NUM, "const": _NUM,
                        "poly": {"type": "array", "items": _NUM, "minItems": 1}}},
    ],
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "dynburst run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["mode", "semigroup", "decay", "bursts", "samplers", "beta", "horizon"],
    "properties": {
        "name": {"type": "string", "description": "scenario identifier used in reports"},
        "mode": {"enum": ["alg1", "alg2"], "description": "exponential-decay or general-decay scan"},
        "space": {
            "type": "object", "additionalProperties": False,
            "properties": {"kind": {"enum": ["grid", "abstract"]},
                           "size": {"type": "integer", "minimum": 1}},
        },
        "semigroup": {
            "type": "object", "required": ["kind"], "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["scalar", "diagonal", "matrix"]},
                "a": _NUM,
                "M": {"type": "number", "minimum": 1},
                "lam": {"type": "array", "items": _NUM},
                "A": {"type": "array", "items": {"type": "array", "items": _NUM}},
            },
        },
        "u0": _FUNC,
        "decay": {
            "type": "object", "required": ["kind"], "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["exponential", "exp_mixture"]},
                "rho": {"type": "number", "exclusiveMinimum": 0},
                "weights": {"type": "array", "items": _NUM},
                "rates": {"type": "array", "items": _NUM},
            },
        },
        "bursts": {
            "type": "array",
            "items": {"type": "object", "required": ["t", "shape"], "additionalProperties": False,
                      "properties": {"t": {"type": "number", "minimum": 0}, "shape": _FUNC}},
        },
        "H": {"type": "number", "minimum": 0, "description": "uniform bound on burst norms"},
        "background": {
            "type": "object", "required": ["kind"], "additionalProperties": False,
            "properties": {"kind": {"enum": ["zero", "exp", "sin"]}, "rate": _NUM, "shape": _FUNC},
        },
        "noise": {
            "type": "object", "additionalProperties": False,
            "properties": {"sigma": {"type": "number", "minimum": 0},
                           "seed": {"type": "integer", "minimum": 0}},
        },
        "samplers": {
            "type": "array", "minItems": 1,
            "items": {"type": "object", "required": ["fn"], "additionalProperties": False,
                      "properties": {"name": {"type": "string"}, "fn": _FUNC}},
        },
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "D": {"type": "number", "minimum": 0},
        "quad": {
            "type": "object", "additionalProperties": False,
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0},
                           "panels": {"type": "integer", "minimum": 1}},
        },
        "threshold_exponent": {"enum": ["rho_beta", "beta"]},
    },
}

BUNDLED = ("alg1-exp", "alg1-sin", "alg2-exp", "alg2-sin", "paper-alt")


@dataclass
class RunConfig:
    name: str
    mode: str
    raw: dict
    scenario: Scenario
    samplers: SamplerSet
    threshold_exponent: str = "rho_beta"

    def with_beta(self, beta: float) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["beta"] = beta
        return build(raw)

    def burst_specs(self) -> list:
        return [b["shape"] for b in self.raw["bursts"]]

    def sampler_specs(self) -> list:
        return [s["fn"] for s in self.raw["samplers"]]


def element_from_spec(spec, space: Space) -> SpaceElement:
    if isinstance(spec, list):
        if space.kind == "grid":
            raise ConfigError("coefficient lists are only accepted for abstract spaces")
        if len(spec) != space.size:
            raise ConfigError(f"{len(spec)} coefficients for a space of size {space.size}")
        return space.element(spec)
    if space.kind == "abstract":
        if isinstance(spec, (int, float)):
            return space.element([float(spec)] * space.size)
        raise ConfigError("abstract spaces take numbers or coefficient lists")
    return make_function(parse_expr(spec), space)


def build(raw: dict) -> RunConfig:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None

    sp_cfg = raw.get("space", {})
    space = Space(sp_cfg.get("kind", "grid"), int(sp_cfg.get("size", 1025)))

    sg = raw["semigroup"]
    kind = sg["kind"]
    try:
        if kind == "scalar":
            S = ScalarSemigroup(float(sg.get("a", 0.0)), space)
        elif kind == "diagonal":
            S = DiagonalSemigroup(sg["lam"], space)
        else:
            S = MatrixSemigroup(sg["A"], float(sg.get("M", 1.0)), float(sg.get("a", 0.0)), space)
    except KeyError as exc:
        raise ConfigError(f"semigroup/{kind}: missing {exc.args[0]!r}") from None

    dc = raw["decay"]
    if dc["kind"] == "exponential":
        decay = ExponentialDecay(float(dc.get("rho", 1.0)))
    else:
        if "weights" not in dc or "rates" not in dc:
            raise ConfigError("decay/exp_mixture needs weights and rates")
        decay = GeneralDecay.exp_mixture(dc["weights"], dc["rates"], dc.get("rho"))

    bursts = BurstTrain(tuple(b["t"] for b in raw["bursts"]),
                        tuple(element_from_spec(b["shape"], space) for b in raw["bursts"]),
                        decay, raw.get("H"))

    bg_cfg = raw.get("background", {"kind": "zero"})
    if bg_cfg["kind"] == "zero":
        bg = ZeroBackground(space)
    else:
        shape = element_from_spec(bg_cfg.get("shape", {"poly": [0, 1]}), space)
        cls = ExpBackground if bg_cfg["kind"] == "exp" else SinBackground
        bg = cls(shape, float(bg_cfg.get("rate", 0.0)))

    nz = raw.get("noise", {})
    noise = NoiseModel(float(nz.get("sigma", 0.0)), int(nz.get("seed", 0)))

    q = raw.get("quad", {})
    params = ModelParams(float(raw["beta"]), float(raw["horizon"]), float(raw.get("D", 0.0)),
                         float(q.get("tol", 1e-10)), int(q.get("panels", 64)))
    u0 = element_from_spec(raw.get("u0", 0), space)

    samplers = SamplerSet(tuple(element_from_spec(s["fn"], space) for s in raw["samplers"]),
                          tuple(s.get("name", f"g{k + 1}") for k, s in enumerate(raw["samplers"])))
    sc = Scenario(S, u0, bursts, bg, noise, params)
    return RunConfig(raw.get("name", "scenario"), raw["mode"], raw, sc, samplers,
                     raw.get("threshold_exponent", "rho_beta"))


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    raw.setdefault("name", path.stem)
    return build(raw)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("dynburst") / "configs" / f"{name}.yaml"))


def resolve(ref: str) -> Path:
    """A filesystem path, or the name of a bundled config."""
    p = Path(ref)
    if p.exists():
        return p
    return bundled_path(ref)
