"""Experiment configuration: a flat YAML mapping plus command-line overrides.

Schema (every key optional except ``experiment``)::

    experiment: qcov_sweep | localtime_profile | inequality_suite | ito_check
                | bouleau_yor | occupation | norm_eval | curve_localtime
    h: 0.3                  # Hurst index, 0 < h < 1
    t_max: 1.0
    n_steps: 4096
    eps_multiples: [32, 16, 8, 4]
    bandwidth: 0.02         # default 0.02 * t_max^h
    bandwidth_factors: [0.5, 1, 2]
    function: {kind: polynomial, params: {coefs: [0, 1]}}   # or a JSON string / alias
    curve: {kind: constant, params: {c: 0}}
    levels: [-1, -0.5, 0, 0.5, 1]
    n_paths: 200
    seed: 0
    samples: 100000         # inequality_suite
    ratio_samples: 0
    mollify_n: [4, 16, 64]  # norm_eval
    workers: 1
    output_path: results/run.csv
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from .functions import Curve, FunctionSpec, polynomial

EXPERIMENTS = (
    "qcov_sweep",
    "localtime_profile",
    "inequality_suite",
    "ito_check",
    "bouleau_yor",
    "occupation",
    "norm_eval",
    "curve_localtime",
)

FUNCTION_ALIASES = {
    "identity": lambda: polynomial([0.0, 1.0]),
    "square": lambda: polynomial([0.0, 0.0, 1.0]),
    "cube": lambda: polynomial([0.0, 0.0, 0.0, 1.0]),
    "x_times_s": lambda: FunctionSpec("x_times_s"),
}

# experiment -> default function when none is configured
DEFAULT_FUNCTION = {
    "qcov_sweep": "identity",
    "ito_check": "square",
    "bouleau_yor": {"kind": "indicator", "params": {"a": -0.5, "b": 0.5}},
    "occupation": "square",
    "norm_eval": {"kind": "indicator", "params": {"a": 0.0, "b": 1.0}},
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` maps field names to messages."""

    def __init__(self, problems: dict):
        self.problems = dict(problems)
        lines = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(f"invalid config ({', '.join(self.problems)}): {lines}")


def parse_function(value) -> FunctionSpec:
    if isinstance(value, FunctionSpec):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text in FUNCTION_ALIASES:
            return FUNCTION_ALIASES[text]()
        if text.startswith("{"):
            return FunctionSpec.from_json(text)
        return FunctionSpec(text, {})
    return FunctionSpec.from_dict(value)


def parse_curve(value) -> Curve:
    if isinstance(value, Curve):
        return value
    if isinstance(value, str):
        value = json.loads(value)
    return Curve.from_dict(value)


@dataclass
class ExperimentConfig:
    experiment: str
    h: float = 0.3
    t_max: float = 1.0
    n_steps: int = 4096
    eps_multiples: tuple = (32, 16, 8, 4)
    bandwidth: float | None = None
    bandwidth_factors: tuple = (0.5, 1.0, 2.0)
    function: FunctionSpec | None = None
    curve: Curve | None = None
    levels: tuple | None = None
    n_paths: int = 200
    seed: int = 0
    samples: int = 100_000
    ratio_samples: int = 0
    mollify_n: tuple = ()
    workers: int = 1
    output_path: str = "results/run.csv"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        bad = {}
        if self.experiment not in EXPERIMENTS:
            bad["experiment"] = f"must be one of {', '.join(EXPERIMENTS)}"
        if not (isinstance(self.h, (int, float)) and 0 < self.h < 1):
            bad["h"] = "must lie in (0, 1)"
        if not (isinstance(self.t_max, (int, float)) and self.t_max > 0 and math.isfinite(self.t_max)):
            bad["t_max"] = "must be positive"
        for name in ("n_steps", "n_paths", "samples", "workers"):
            v = getattr(self, name)
            if not (isinstance(v, int) and not isinstance(v, bool) and v > 0):
                bad[name] = "must be a positive integer"
        if isinstance(self.n_steps, int) and self.n_steps < 2:
            bad["n_steps"] = "must be at least 2"
        if isinstance(self.n_paths, int) and self.n_paths < 2:
            bad["n_paths"] = "need at least 2 paths for a standard error"
        if not (isinstance(self.seed, int) and self.seed >= 0):
            bad["seed"] = "must be a non-negative integer"
        if not (isinstance(self.ratio_samples, int) and self.ratio_samples >= 0):
            bad["ratio_samples"] = "must be a non-negative integer"
        if not self.eps_multiples or any(not isinstance(m, int) or m < 1 for m in self.eps_multiples):
            bad["eps_multiples"] = "must be positive integers"
        if self.bandwidth is not None and not self.bandwidth > 0:
            bad["bandwidth"] = "must be positive"
        if not self.bandwidth_factors or any(not b > 0 for b in self.bandwidth_factors):
            bad["bandwidth_factors"] = "must be positive"
        if any(not isinstance(n, int) or n < 1 for n in self.mollify_n):
            bad["mollify_n"] = "must be positive integers"
        if self.levels is not None and len(self.levels) == 0:
            bad["levels"] = "must not be empty"
        if not self.output_path:
            bad["output_path"] = "must be a file path"
        if self.experiment == "bouleau_yor" and self.function is not None:
            if not self.function.time_dependent and self.function.kind not in ("step", "indicator", "constant"):
                bad["function"] = "bouleau_yor needs a step-type function or a time-dependent one"
        if self.experiment == "ito_check" and self.function is not None and self.function.time_dependent:
            bad["function"] = "ito_check takes a function of x only"
        if bad:
            raise ConfigError(bad)

    # -- resolved values --------------------------------------------------

    @property
    def resolved_function(self) -> FunctionSpec | None:
        if self.function is not None:
            return self.function
        d = DEFAULT_FUNCTION.get(self.experiment)
        return None if d is None else parse_function(d)

    @property
    def resolved_bandwidth(self) -> float:
        return self.bandwidth if self.bandwidth is not None else 0.02 * self.t_max**self.h

    @property
    def resolved_curve(self) -> Curve:
        return self.curve if self.curve is not None else Curve("constant", {"c": 0.0})

    @property
    def csv_path(self) -> Path:
        p = Path(self.output_path)
        return p if p.suffix == ".csv" else Path(f"{p}.csv")

    @property
    def json_path(self) -> Path:
        return self.csv_path.with_suffix(".json")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        fn = self.resolved_function
        d["function"] = None if fn is None else fn.to_dict()
        d["curve"] = self.resolved_curve.to_dict() if self.experiment == "curve_localtime" else (
            None if self.curve is None else self.curve.to_dict()
        )
        d["bandwidth"] = self.resolved_bandwidth
        for k in ("eps_multiples", "bandwidth_factors", "mollify_n", "levels"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


_TUPLE_FIELDS = {"eps_multiples", "bandwidth_factors", "levels", "mollify_n"}
_KNOWN = {f.name for f in fields(ExperimentConfig)}


def build_config(values: dict) -> ExperimentConfig:
    """ExperimentConfig from a flat mapping; unknown keys are errors."""
    unknown = sorted(set(values) - _KNOWN)
    if unknown:
        raise ConfigError({k: "unknown key" for k in unknown})
    if "experiment" not in values:
        raise ConfigError({"experiment": "missing"})
    kw = {}
    bad = {}
    for k, v in values.items():
        if v is None:
            continue
        try:
            if k == "function":
                v = parse_function(v)
            elif k == "curve":
                v = parse_curve(v)
            elif k in _TUPLE_FIELDS:
                if isinstance(v, str):
                    v = [x for x in v.replace(",", " ").split()]
                v = tuple(int(x) if k in ("eps_multiples", "mollify_n") else float(x) for x in v)
            elif k in ("h", "t_max", "bandwidth"):
                v = float(v)
            elif k in ("n_steps", "n_paths", "seed", "samples", "ratio_samples", "workers"):
                if isinstance(v, float) and not v.is_integer():
                    raise ValueError("not an integer")
                v = int(v)
        except (TypeError, ValueError, KeyError, json.JSONDecodeError) as exc:
            bad[k] = f"cannot parse: {exc}"
            continue
        kw[k] = v
    if bad:
        raise ConfigError(bad)
    return ExperimentConfig(**kw)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a YAML config and apply ``overrides`` (flags win; None means unset)."""
    values = {}
    if path is not None:
        try:
            data = yaml.safe_load(Path(path).read_text())
        except yaml.YAMLError as exc:
            raise ConfigError({"config": f"not valid YAML: {exc}"}) from exc
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError({"config": "top level must be a mapping"})
        values.update(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return build_config(values)


def config_echo(cfg: ExperimentConfig) -> dict:
    return json.loads(json.dumps(cfg.to_dict()))

