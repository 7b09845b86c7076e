"""
Experiment configuration: a YAML document validated into an ExperimentConfig.

Top-level keys (all optional unless a subcommand needs a grid):

    preset: fig1 | fig2a | fig2b | fig3 | fig4 | fig5 | fig6 | fig7
    subcommand: must agree with the command line if given
    seed: integer
    workers: integer >= 1
    trace: bool (evolve, master: also write a per-s ground-population file)
    params: {alpha, beta_offset, omega_tf, kappa2, temperature, cutoff}
    grids: {s, alpha, beta, omega_tf, kappa2, sigma, temperature}
    ensemble: {n_realizations, resamples, confidence}
    svmc: {n_sweeps, n_runs, resamples}
    negativity: {mode}
    min_gap: {s_resolution}

A grid is either a list of numbers or a mapping {start, stop, num[, log]}
expanded with linspace (or geomspace when ``log`` is true).
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .hamiltonian import ScheduleParams
from .noise_ensemble import DEFAULT_SEED

SUBCOMMANDS = ("spectrum", "pt", "evolve", "master", "sweep", "svd", "svmc", "negativity")

REQUIRED_GRIDS = {
    "spectrum": ("s",),
    "pt": ("alpha", "beta"),
    "evolve": ("omega_tf",),
    "master": ("omega_tf", "kappa2"),
    "sweep": ("sigma",),
    "svd": ("omega_tf",),
    "svmc": ("temperature",),
    "negativity": ("alpha",),
}

# (predicate, description) for every grid value
_GRID_RULES = {
    "s": (lambda x: 0.0 <= x <= 1.0, "in [0, 1]"),
    "alpha": (lambda x: True, "finite"),
    "beta": (lambda x: 0.0 <= x < 1.0, "in [0, 1)"),
    "omega_tf": (lambda x: x > 0, "positive"),
    "kappa2": (lambda x: x >= 0, "non-negative"),
    "sigma": (lambda x: x >= 0, "non-negative"),
    "temperature": (lambda x: x > 0, "positive"),
}

_SECTIONS = {
    "params": {f.name for f in fields(ScheduleParams)},
    "grids": set(_GRID_RULES),
    "ensemble": {"n_realizations", "resamples", "confidence"},
    "svmc": {"n_sweeps", "n_runs", "resamples"},
    "negativity": {"mode"},
    "min_gap": {"s_resolution"},
}
_TOP_LEVEL = set(_SECTIONS) | {"preset", "subcommand", "seed", "workers", "trace"}

PRESETS = {
    "fig1": {"subcommand": "pt",
             "grids": {"alpha": {"start": 0.0, "stop": 3.0, "num": 301},
                       "beta": [0.01, 0.05, 0.1]}},
    "fig2a": {"subcommand": "master",
              "params": {"alpha": 2.0, "beta_offset": 0.05, "temperature": 1.57},
              "grids": {"omega_tf": {"start": 1e2, "stop": 1e4, "num": 5, "log": True},
                        "kappa2": [0.0, 1e-5, 1e-4, 1e-3, 1e-2]}},
    "fig2b": {"subcommand": "sweep",
              "params": {"alpha": 2.0, "beta_offset": 0.05, "omega_tf": 1e4, "kappa2": 0.0},
              "grids": {"sigma": [0.001, 0.003, 0.01, 0.03, 0.1, 0.3]},
              "ensemble": {"n_realizations": 1000, "resamples": 1000, "confidence": 0.95}},
    "fig3": {"subcommand": "svd",
             "params": {"alpha": 2.0, "beta_offset": 0.05},
             "grids": {"omega_tf": {"start": 1e1, "stop": 1e6, "num": 11, "log": True}}},
    "fig4": {"subcommand": "svmc",
             "params": {"alpha": 2.0, "beta_offset": 0.05},
             "grids": {"temperature": [1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]},
             "svmc": {"n_sweeps": 1_000_000, "n_runs": 10_000, "resamples": 1000}},
    "fig5": {"subcommand": "svmc",
             "params": {"alpha": 2.0, "beta_offset": 0.05},
             "grids": {"temperature": [1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0]},
             "svmc": {"n_sweeps": 1_000_000, "n_runs": 10_000, "resamples": 1000}},
    "fig6": {"subcommand": "negativity",
             "params": {"beta_offset": 0.05},
             "grids": {"alpha": {"start": 0.0, "stop": 3.0, "num": 61},
                       "omega_tf": [1e2, 1e3, 1e4], "kappa2": [0.0]},
             "negativity": {"mode": "closed"}},
    "fig7": {"subcommand": "master", "trace": True,
             "params": {"alpha": 2.0, "beta_offset": 0.05, "temperature": 1.57},
             "grids": {"omega_tf": [1e3, 1e4], "kappa2": [1e-4]}},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    params: ScheduleParams
    grids: dict
    seed: int = DEFAULT_SEED
    workers: int = 1
    trace: bool = False
    ensemble: dict = field(default_factory=dict)
    svmc: dict = field(default_factory=dict)
    negativity_mode: str = "perturbative"
    s_resolution: float = 1e-3
    preset: str | None = None

    def as_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "preset": self.preset,
            "seed": self.seed,
            "workers": self.workers,
            "trace": self.trace,
            "params": {f.name: getattr(self.params, f.name) for f in fields(ScheduleParams)},
            "grids": {k: [float(x) for x in v] for k, v in self.grids.items()},
            "ensemble": dict(self.ensemble),
            "svmc": dict(self.svmc),
            "negativity": {"mode": self.negativity_mode},
            "min_gap": {"s_resolution": self.s_resolution},
        }


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _number(value, path: str) -> float:
    # YAML 1.1 reads "1e4" (no decimal point) as a string
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite")
    return float(value)


def _integer(value, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return value


def _expand_grid(name: str, spec) -> np.ndarray:
    path = f"grids.{name}"
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "num", "log"}
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        missing = {"start", "stop", "num"} - set(spec)
        if missing:
            raise ConfigError(f"{path}: missing keys {sorted(missing)}")
        start = _number(spec["start"], f"{path}.start")
        stop = _number(spec["stop"], f"{path}.stop")
        num = _integer(spec["num"], f"{path}.num", 1)
        if spec.get("log", False):
            if start <= 0 or stop <= 0:
                raise ConfigError(f"{path}: log grids need positive endpoints")
            values = np.geomspace(start, stop, num)
        else:
            values = np.linspace(start, stop, num)
    elif isinstance(spec, (list, tuple)):
        values = np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(spec)])
    else:
        values = np.array([_number(spec, path)])
    ok, rule = _GRID_RULES[name]
    for i, x in enumerate(values):
        if not ok(x):
            raise ConfigError(f"{path}[{i}]: value {x} must be {rule}")
    return values


def parse_config(text: str, subcommand: str, seed: int | None = None) -> ExperimentConfig:
    """Validate a YAML config for ``subcommand``; ``seed`` overrides the file."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"subcommand: unknown {subcommand!r}; expected one of {SUBCOMMANDS}")
    try:
        doc = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {' '.join(str(exc).split())}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping")

    unknown = set(doc) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    for section, allowed in _SECTIONS.items():
        block = doc.get(section, {})
        if not isinstance(block, dict):
            raise ConfigError(f"{section}: expected a mapping")
        extra = set(block) - allowed
        if extra:
            raise ConfigError(f"{section}: unknown keys {sorted(extra)}")

    preset = doc.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"preset: unknown {preset!r}; expected one of {sorted(PRESETS)}")
        doc = _merge(PRESETS[preset], doc)
    declared = doc.get("subcommand", subcommand)
    if declared != subcommand:
        raise ConfigError(f"subcommand: config is for {declared!r}, invoked as {subcommand!r}")

    raw_params = {k: _number(v, f"params.{k}") for k, v in doc.get("params", {}).items()}
    try:
        params = ScheduleParams(**raw_params)
    except ValueError as exc:
        # ScheduleParams messages start with the offending field name
        raise ConfigError(f"params.{str(exc).split()[0]}: {exc}") from exc

    grids = {name: _expand_grid(name, spec) for name, spec in doc.get("grids", {}).items()}
    for name in REQUIRED_GRIDS[subcommand]:
        if name not in grids or grids[name].size == 0:
            raise ConfigError(f"grids.{name}: required and non-empty for {subcommand!r}")

    if seed is None:
        seed = doc.get("seed", DEFAULT_SEED)
    seed = _integer(seed, "seed", 0)
    workers = _integer(doc.get("workers", 1), "workers", 1)
    trace = doc.get("trace", False)
    if not isinstance(trace, bool):
        raise ConfigError("trace: expected true or false")

    ensemble = dict(doc.get("ensemble", {}))
    for key in ("n_realizations", "resamples"):
        if key in ensemble:
            ensemble[key] = _integer(ensemble[key], f"ensemble.{key}", 1)
    if "confidence" in ensemble:
        c = _number(ensemble["confidence"], "ensemble.confidence")
        if not 0 < c < 1:
            raise ConfigError("ensemble.confidence: must lie in (0, 1)")
        ensemble["confidence"] = c

    svmc = dict(doc.get("svmc", {}))
    for key in svmc:
        svmc[key] = _integer(svmc[key], f"svmc.{key}", 1)

    mode = doc.get("negativity", {}).get("mode", "perturbative")
    if mode not in ("closed", "open", "perturbative"):
        raise ConfigError(f"negativity.mode: unknown {mode!r}")

    s_res = _number(doc.get("min_gap", {}).get("s_resolution", 1e-3), "min_gap.s_resolution")
    if not 0 < s_res < 1:
        raise ConfigError("min_gap.s_resolution: must lie in (0, 1)")

    return ExperimentConfig(subcommand=subcommand, params=params, grids=grids, seed=seed,
                            workers=workers, trace=trace, ensemble=ensemble, svmc=svmc,
                            negativity_mode=mode, s_resolution=s_res, preset=preset)
