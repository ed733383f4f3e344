"""Experiment configuration: YAML schema, strict validation, dispatch table.

Configs are flat YAML documents with a fixed key set per experiment kind;
unknown keys are rejected with the offending key named (and the line
number when it can be located in the source text).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .disc import Annulus
from .statistics import TestFunction


class ConfigError(ValueError):
    """Configuration file violates the schema."""


@dataclass(frozen=True)
class ParamSpec:
    type: str  # int | float | bool | int_list | annulus | testfunction | curvature
    required: bool = False
    default: Any = None


TOP_LEVEL_KEYS = {"experiment", "seed", "threads", "out", "params"}

EXPERIMENTS: dict[str, dict[str, ParamSpec]] = {
    "plateau": {
        "p": ParamSpec("int_list", required=True),
        "r_min": ParamSpec("float", default=0.3),
        "r_max": ParamSpec("float", default=0.9),
        "n_grid": ParamSpec("int", default=512),
        "tolerance": ParamSpec("float", default=1e-3),
    },
    "sup": {
        "p": ParamSpec("int_list", required=True),
        "tolerance": ParamSpec("float", default=0.25),
    },
    "model-kernel": {
        "rho_prime": ParamSpec("int", required=True),
        "curvature": ParamSpec("curvature", required=True),
        "max_deg": ParamSpec("int", default=12),
        "parity_step": ParamSpec("float", default=1e-3),
        "parity_tolerance": ParamSpec("float", default=1e-5),
    },
    "equidistribution": {
        "p": ParamSpec("int_list", required=True),
        "annulus": ParamSpec("annulus", required=True),
        "samples": ParamSpec("int", required=True),
        "paired_seeds": ParamSpec("bool", default=False),
        "slack": ParamSpec("float", default=0.05),
    },
    "variance": {
        "p": ParamSpec("int_list", required=True),
        "testfunction": ParamSpec("testfunction", required=True),
        "samples": ParamSpec("int", required=True),
        "rel_tolerance": ParamSpec("float", default=0.15),
    },
    "clt": {
        "p": ParamSpec("int_list", required=True),
        "testfunction": ParamSpec("testfunction", required=True),
        "samples": ParamSpec("int", required=True),
        "ks_level": ParamSpec("float", default=0.01),
    },
    "holes": {
        "p": ParamSpec("int_list", required=True),
        "annulus": ParamSpec("annulus", required=True),
        "samples": ParamSpec("int", required=True),
    },
    "deviation": {
        "p": ParamSpec("int_list", required=True),
        "annulus": ParamSpec("annulus", required=True),
        "delta": ParamSpec("float", required=True),
        "samples": ParamSpec("int", required=True),
    },
    "kernel-decay": {
        "p": ParamSpec("int", required=True),
        "annulus": ParamSpec("annulus", required=True),
        "n_pairs": ParamSpec("int", default=400),
        "k": ParamSpec("int", default=2),
        "far_tolerance": ParamSpec("float", default=1e-3),
    },
    "l1log": {
        "p": ParamSpec("int_list", required=True),
        "annulus": ParamSpec("annulus", required=True),
    },
}

# one-line statement of the law each experiment probes (shown by `list`)
EXPERIMENT_ANCHORS: dict[str, str] = {
    "plateau": "kernel plateau: 2 pi B_p/(p-1) -> 1 on fixed annuli",
    "sup": "global sup of B_p grows like (p/2 pi)^(3/2)",
    "model-kernel": "model kernel at a curvature zero: B(0,0) > 0, = c/2 pi when constant; even in Z",
    "equidistribution": "zero counts / p converge to the curvature area of the region",
    "variance": "Var[Y(phi)] = zeta(3)/(4 pi^2 p) int |L(phi)|^2 c1 + lower order",
    "clt": "standardized linear statistics are asymptotically normal",
    "holes": "hole probabilities decay like exp(-C p^2)",
    "deviation": "large-deviation frequencies for counts and log-sup decay in p",
    "kernel-decay": "normalized kernel: Gaussian near-diagonal decay, negligible beyond sqrt(12k log p/p)",
    "l1log": "L1 norm of log B_p grows at most like log p",
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict[str, Any]
    seed: int
    threads: int = 1
    out: str = "results"
    source: dict = field(default_factory=dict)

    def digest_payload(self) -> dict:
        # threads/out are execution details; they must not affect outputs
        return {"experiment": self.kind, "seed": self.seed, "params": _jsonable(self.params)}


def _jsonable(obj):
    if isinstance(obj, Annulus):
        return {"a": obj.a, "b": obj.b}
    if isinstance(obj, TestFunction):
        return {"a": obj.a, "b": obj.b, "amplitude": obj.amplitude}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _key_line(text: str, key: str) -> str:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if stripped.strip().startswith(f"{key}:"):
            return f" (line {i})"
    return ""


def _coerce(name: str, spec: ParamSpec, value: Any, text: str) -> Any:
    where = _key_line(text, name)
    try:
        if spec.type == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"key '{name}'{where}: expected integer, got {value!r}")
            return int(value)
        if spec.type == "float":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"key '{name}'{where}: expected number, got {value!r}")
            return float(value)
        if spec.type == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"key '{name}'{where}: expected boolean, got {value!r}")
            return value
        if spec.type == "int_list":
            if isinstance(value, int) and not isinstance(value, bool):
                return [value]
            if isinstance(value, list) and value and all(isinstance(v, int) and not isinstance(v, bool) for v in value):
                return list(value)
            raise ConfigError(f"key '{name}'{where}: expected integer or list of integers, got {value!r}")
        if spec.type == "annulus":
            if not isinstance(value, dict) or set(value) != {"a", "b"}:
                raise ConfigError(f"key '{name}'{where}: expected mapping with keys a, b")
            return Annulus(float(value["a"]), float(value["b"]))
        if spec.type == "testfunction":
            if not isinstance(value, dict) or not {"a", "b"} <= set(value) or set(value) - {"a", "b", "amplitude"}:
                raise ConfigError(f"key '{name}'{where}: expected mapping with keys a, b[, amplitude]")
            return TestFunction(float(value["a"]), float(value["b"]), float(value.get("amplitude", 1.0)))
        if spec.type == "curvature":
            if not isinstance(value, list):
                raise ConfigError(f"key '{name}'{where}: expected list of [i, j, coefficient] triples")
            triples = []
            for item in value:
                if not isinstance(item, (list, tuple)) or len(item) != 3:
                    raise ConfigError(f"key '{name}'{where}: each curvature entry must be [i, j, coefficient]")
                triples.append((int(item[0]), int(item[1]), float(item[2])))
            return triples
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key '{name}'{where}: {exc}") from exc
    raise ConfigError(f"internal: unknown parameter type {spec.type}")


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown top-level key '{key}'{_key_line(text, key)}")
    kind = raw.get("experiment")
    if kind not in EXPERIMENTS:
        raise ConfigError(
            f"key 'experiment'{_key_line(text, 'experiment')}: must be one of {', '.join(sorted(EXPERIMENTS))}"
        )
    if "seed" not in raw:
        raise ConfigError("missing required key 'seed'")
    seed = _coerce("seed", ParamSpec("int"), raw["seed"], text)
    threads = _coerce("threads", ParamSpec("int", default=1), raw.get("threads", 1), text)
    if threads < 1:
        raise ConfigError("key 'threads': must be >= 1")
    out = raw.get("out", "results")
    if not isinstance(out, str):
        raise ConfigError("key 'out': expected string")
    schema = EXPERIMENTS[kind]
    raw_params = raw.get("params", {})
    if not isinstance(raw_params, dict):
        raise ConfigError("key 'params': expected mapping")
    unknown = set(raw_params) - set(schema)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown parameter '{key}'{_key_line(text, key)} for experiment '{kind}'")
    params: dict[str, Any] = {}
    for name, spec in schema.items():
        if name in raw_params:
            params[name] = _coerce(name, spec, raw_params[name], text)
        elif spec.required:
            raise ConfigError(f"missing required parameter '{name}' for experiment '{kind}'")
        else:
            params[name] = spec.default
    return ExperimentConfig(kind=kind, params=params, seed=seed, threads=threads, out=out, source=raw)
