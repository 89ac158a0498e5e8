"""Experiment configuration: TOML parsing, strict validation, round-trip.

Configs are nested tables of scalars and lists. Validation is strict:
unknown keys anywhere are a ConfigError, not a warning, so config drift
fails fast. ``to_toml``/``parse_toml`` round-trip losslessly for the
schema's value types (floats serialize via repr, which is exact).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .exceptions import ConfigError

EXPERIMENTS = ("bench-gaussian", "bias-sweep", "example1", "toy-sr", "fv-check")

_REQUIRED = object()


def _field(ftype, default=_REQUIRED):
    return (ftype, default)


_OTS_SECTION = {
    "potential_iters": _field(int, 1500),
    "map_iters_per_potential": _field(int, 10),
    "lr_potential": _field(float, 1e-3),
    "lr_map": _field(float, 1e-3),
    "lr_schedule": _field(str, "cosine"),
    "batch_size": _field(int, 128),
    "hidden": _field(list, [64, 64]),
    "cost": _field(str, "mse"),
}

_GAN_SECTION = {
    "lambdas": _field(list, [0.0, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0, 100000.0]),
    "generator_iters": _field(int, 1000),
    "disc_iters_per_gen": _field(int, 10),
    "gp_weight": _field(float, 10.0),
    "lr": _field(float, 1e-3),
    "adam_beta1": _field(float, 0.5),
    "adam_beta2": _field(float, 0.999),
    "batch_size": _field(int, 128),
    "hidden": _field(list, [64, 64]),
    "content_cost": _field(str, "mse"),
}

SCHEMAS = {
    "bench-gaussian": {
        "pair": {
            "kind": _field(str, "explicit"),
            "dim": _field(int, 1),
            "mean_p": _field(list, [0.0]),
            "cov_p": _field(list, [[1.0]]),
            "mean_q": _field(list, [1.0]),
            "cov_q": _field(list, [[2.25]]),
        },
        "ots": dict(_OTS_SECTION),
        "gan": dict(_GAN_SECTION),
        "metrics": {
            "uvp_samples": _field(int, 50_000),
            "mmd_samples": _field(int, 2000),
            "bandwidth": _field(float, 0.0),  # 0 -> median heuristic
        },
    },
    "example1": {
        "grid": {"lambdas": _field(list, [0.2, 0.6, 1.0, 1.4, 1.8])},
        "solver": {
            "lr": _field(float, 0.1),
            "max_iters": _field(int, 10_000),
            "tol": _field(float, 1e-12),
        },
        "ots": {**_OTS_SECTION, "potential_iters": _field(int, 1200)},
    },
    "toy-sr": {
        "signal": {
            "dim": _field(int, 64),
            "stride": _field(int, 4),
            "blur_width": _field(int, 4),
        },
        "cost": {
            "kind": _field(str, "mse"),
            "upsampler": _field(str, "linear"),
            "refresh_every": _field(int, 0),  # 0 -> no dynamic refresh
        },
        "ots": {**_OTS_SECTION, "hidden": _field(list, [128, 128])},
        "metrics": {
            "eval_samples": _field(int, 2000),
            "mmd_samples": _field(int, 2000),
            "bandwidth": _field(float, 0.0),
            "palette_points": _field(int, 1000),
            "palette_repeats": _field(int, 100),
        },
    },
    "fv-check": {
        "fv": {
            "n_instances": _field(int, 20),
            "support_size": _field(int, 16),
            "dim": _field(int, 2),
            "eps_min": _field(float, 1e-3),
            "eps_max": _field(float, 0.1),
            "n_eps": _field(int, 7),
            "kinds": _field(list, ["kl", "mmd2", "w2"]),
        },
    },
}
SCHEMAS["bias-sweep"] = SCHEMAS["bench-gaussian"]  # same runner, alias name

_TOP_LEVEL = {
    "experiment": _field(str, None),
    "seed": _field(int, 0),
    "out_dir": _field(str, None),
    "workers": _field(int, 1),
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    out_dir: str
    workers: int
    sections: dict

    def to_dict(self) -> dict:
        out = {
            "experiment": self.experiment,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "workers": self.workers,
        }
        out.update(copy.deepcopy(self.sections))
        return out

    def section(self, name) -> dict:
        return self.sections[name]


def _check_type(value, ftype, path):
    if ftype is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if ftype is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if ftype is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if ftype is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return copy.deepcopy(value)
    raise AssertionError(f"unhandled schema type {ftype}")


def _validate_section(data, schema, path):
    out = {}
    for key in data:
        if key not in schema:
            raise ConfigError(f"unknown config key '{path}{key}'")
    for key, (ftype, default) in schema.items():
        if key in data:
            out[key] = _check_type(data[key], ftype, f"{path}{key}")
        elif default is _REQUIRED:
            raise ConfigError(f"missing required config key {path}{key!r}")
        else:
            out[key] = copy.deepcopy(default)
    return out


def validate_config(raw: dict, experiment: str | None = None) -> ExperimentConfig:
    """Strict-mode validation of a parsed config dict."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    name = raw.get("experiment", experiment)
    if name is None:
        raise ConfigError("experiment name missing (pass a subcommand or an 'experiment' key)")
    if experiment is not None and name != experiment:
        raise ConfigError(f"config is for experiment {name!r}, requested {experiment!r}")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    schema = SCHEMAS[name]
    top = {}
    sections = {}
    for key, value in raw.items():
        if key in _TOP_LEVEL:
            top[key] = value
        elif key in schema:
            if not isinstance(value, dict):
                raise ConfigError(f"config key {key!r} must be a table")
            sections[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    seed = _check_type(top.get("seed", 0), int, "seed")
    workers = _check_type(top.get("workers", 1), int, "workers")
    out_dir = top.get("out_dir")
    if out_dir is not None:
        out_dir = _check_type(out_dir, str, "out_dir")
    else:
        out_dir = f"runs/{name}"
    validated = {
        table: _validate_section(sections.get(table, {}), table_schema, f"{table}.")
        for table, table_schema in schema.items()
    }
    return ExperimentConfig(
        experiment=name, seed=seed, out_dir=out_dir, workers=workers, sections=validated
    )


def parse_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc


def load_config(path, experiment=None, seed=None, out_dir=None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = parse_toml(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if seed is not None:
        raw["seed"] = seed
    if out_dir is not None:
        raw["out_dir"] = str(out_dir)
    return validate_config(raw, experiment)


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize {type(value).__name__} to TOML")


def to_toml(config: dict) -> str:
    """Serialize a (validated) config dict back to TOML."""
    lines = []
    tables = []
    for key, value in config.items():
        if isinstance(value, dict):
            tables.append((key, value))
        else:
            lines.append(f"{key} = {_toml_scalar(value)}")
    for name, table in tables:
        lines.append("")
        lines.append(f"[{name}]")
        for key, value in table.items():
            lines.append(f"{key} = {_toml_scalar(value)}")
    return "\n".join(lines) + "\n"
