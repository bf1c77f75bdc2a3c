"""Experiment configuration read from TOML and checked against a schema."""

from __future__ import annotations

import copy
import sys

import jsonschema

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["EXPERIMENTS", "CONFIG_SCHEMA", "DEFAULTS", "ConfigError", "load_config", "make_config"]

EXPERIMENTS = (
    "isometry-suite",
    "einstein-residual",
    "preglue-sweep",
    "weitzenbock",
    "wplus-spectrum",
    "fefferman",
    "nu-integrand",
    "weight-bounds",
    "l2-weights",
    "bracket-constants",
)

_pos = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["experiment", "n", "N", "seed"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "id": {"type": "string"},
        "n": {"type": "integer", "minimum": 2, "maximum": 6},
        "N": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {"type": "object", "additionalProperties": _pos},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k_min": {"type": "integer", "minimum": 0},
                "k_max": {"type": "integer", "minimum": 0},
            },
        },
        "params": {"type": "object"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "json", "svg"]}},
            },
        },
    },
}

DEFAULTS = {
    "isometry-suite": {
        "N": 50,
        "tolerances": {"pullback": 1e-9, "involution": 1e-13, "holomorphy": 1e-10},
        "params": {"dilations": 10, "inversions": 5, "lambda_range": [0.3, 3.0]},
    },
    "einstein-residual": {
        "N": 100,
        "tolerances": {"einstein": 1e-8, "pinching": 1e-6, "extremal": 1e-8},
        "params": {"planes": 500},
    },
    "preglue-sweep": {
        "N": 64,
        "sweep": {"k_min": 3, "k_max": 7},
        "tolerances": {"slope_low": 0.4, "slope_high": 0.6, "ratio_max": 3.0,
                       "T_slope_min": 0.4, "dT_slope_min": 0.8},
        "params": {"cr": "normal-form", "cr_amplitude": 0.1, "kappa_amplitude": 1.0},
    },
    "weitzenbock": {
        "N": 20,
        "tolerances": {"residual": 1e-5, "control_min": 1e-3},
        "params": {},
    },
    "wplus-spectrum": {
        "N": 5,
        "tolerances": {"spectrum": 1e-7, "alpha": 1e-6},
        "params": {"points": 5},
    },
    "fefferman": {
        "N": 100,
        "tolerances": {"kahler": 1e-10, "fefferman": 1e-10},
        "params": {"fefferman_points": 50},
    },
    "nu-integrand": {
        "N": 100,
        "tolerances": {"pointwise": 1e-8},
        "params": {"quadrature_N": 256, "collar": [0.25, 1.0], "window": 1.0, "ledger_k": [1, 2, 3]},
    },
    "weight-bounds": {
        "N": 64,
        "sweep": {"k_min": 2, "k_max": 6},
        "tolerances": {"seam": 1e-10, "ratio_max": 1.5},
        "params": {"theta": 0.7},
    },
    "l2-weights": {
        "N": 6,
        "tolerances": {},
        "params": {"cases": [[2, 0.5, 0.25], [2, 1.5, 1.4], [2, 1.0, 0.5],
                             [2, 1.2, 0.8], [2, 1.9, 0.05], [3, 2.0, 1.0]],
                   "shells": 8},
    },
    "bracket-constants": {
        "N": 32,
        "tolerances": {"limit": 1e-3, "w2_slope_min": 0.9, "w_slope_min": 0.4},
        "params": {"tau1": 0.25, "cr_amplitude": 0.1},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def make_config(experiment: str, overrides: dict | None = None) -> dict:
    """Defaults for ``experiment`` merged with ``overrides`` and validated."""
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}")
    base = {"experiment": experiment, "n": 2, "seed": 0,
            "output": {"dir": "out", "formats": ["csv", "json", "svg"]}}
    cfg = _merge(base, DEFAULTS[experiment])
    cfg = _merge(cfg, overrides or {})
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        path = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(path, e.message) from None
    sw = cfg.get("sweep")
    if sw is not None and sw.get("k_min", 0) > sw.get("k_max", 0):
        raise ConfigError("sweep", "empty sweep range (k_min > k_max)")


def load_config(path, experiment: str | None = None, overrides: dict | None = None) -> dict:
    """Read a TOML file; ``experiment`` must agree with the file when both are given."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError("config", f"malformed TOML in {path}: {e}") from None
    file_exp = data.pop("experiment", None)
    if experiment and file_exp and file_exp != experiment:
        raise ConfigError("experiment", f"config is for {file_exp!r}, not {experiment!r}")
    exp = experiment or file_exp
    if exp is None:
        raise ConfigError("experiment", "no experiment given")
    return make_config(exp, _merge(data, overrides or {}))
