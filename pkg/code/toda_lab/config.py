"""Run configuration: dataclass defaults, then a JSON file, then command-line flags."""

import json
import os
from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .logs import OUTPUT_DIR_ENV

COMMANDS = ("spectrum", "rh-map", "monodromy", "yangyang", "verify", "tui")
FORMATS = ("json", "csv")


@dataclass(frozen=True)
class TodaParams:
    N: int
    hbar: float
    Lambda: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError(f"N must be an integer >= 2, got {self.N}")
        if not self.hbar > 0:
            raise ConfigError(f"hbar must be positive, got {self.hbar}")
        if not self.Lambda > 0:
            raise ConfigError(f"Lambda must be positive, got {self.Lambda}")


@dataclass(frozen=True)
class RunConfig:
    command: str = "spectrum"
    N: int = 2
    hbar: float = 1.0
    Lambda: float = 0.3
    delta: tuple = None
    sigma: tuple = None
    tau: tuple = None
    modes: tuple = None
    levels: int = 1
    tol: float = 1e-10
    max_iter: int = 30
    grid_M: float = None
    grid_h: float = None
    output: str = None
    format: str = "json"
    flip_stokes_sign: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.format not in FORMATS:
            raise ConfigError(f"Unknown output format {self.format!r}; choose json or csv")
        TodaParams(self.N, self.hbar, self.Lambda)
        if not self.tol > 0 or self.max_iter < 1:
            raise ConfigError(f"Tolerances must be positive (tol={self.tol}, max_iter={self.max_iter})")
        if self.levels < 1:
            raise ConfigError(f"levels must be >= 1, got {self.levels}")
        for name in ("grid_M", "grid_h"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be positive, got {value}")
        for name in ("delta", "sigma", "tau", "modes"):
            value = getattr(self, name)
            if value is not None and len(value) != self.N:
                raise ConfigError(f"{name} needs {self.N} entries, got {len(value)}")

    @property
    def params(self):
        return TodaParams(self.N, self.hbar, self.Lambda)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def parse_complex_list(value, name):
    """'0.3, -0.3' or a JSON list of numbers or complex() strings."""
    if value is None:
        return None
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        return tuple(complex(str(item).strip().replace(" ", "")) for item in items)
    except ValueError as e:
        raise ConfigError(f"Cannot read {name} as complex numbers: {value!r}") from e


def parse_bool(value, name):
    """JSON true/false, or one of "true", "false", "1", "0" (any case)."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int) and value in (0, 1):
        return bool(value)
    if isinstance(value, str) and value.strip().lower() in _BOOL_WORDS:
        return _BOOL_WORDS[value.strip().lower()]
    raise ConfigError(f"{name} must be true or false, got {value!r}")


def parse_int_list(value, name):
    if value is None:
        return None
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        return tuple(int(str(item).strip()) for item in items)
    except ValueError as e:
        raise ConfigError(f"Cannot read {name} as integers: {value!r}") from e


_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False}

_CONVERTERS = {
    "N": int,
    "hbar": float,
    "Lambda": float,
    "levels": int,
    "tol": float,
    "max_iter": int,
    "grid_M": float,
    "grid_h": float,
    "delta": lambda v: parse_complex_list(v, "delta"),
    "sigma": lambda v: parse_complex_list(v, "sigma"),
    "tau": lambda v: parse_complex_list(v, "tau"),
    "modes": lambda v: parse_int_list(v, "modes"),
    "flip_stokes_sign": lambda v: parse_bool(v, "flip_stokes_sign"),
}


def _convert(values, origin):
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"Unknown configuration key {key!r} in {origin}")
        if value is None:
            continue
        convert = _CONVERTERS.get(key)
        try:
            out[key] = convert(value) if convert is not None else value
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Bad value for {key} in {origin}: {value!r}") from e
    return out


def read_config_file(path):
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return data


def load_config(command, config_path=None, overrides=None):
    """Defaults, then the JSON file, then flags; a flag wins over the file."""
    values = {}
    if config_path is not None:
        values.update(_convert(read_config_file(config_path), config_path))
    if overrides:
        values.update(_convert(overrides, "command line"))
    values["command"] = command
    try:
        return RunConfig(**values)
    except TypeError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def with_overrides(cfg, **changes):
    return replace(cfg, **changes)


def output_path(cfg):
    """Resolve --output against TODA_LAB_OUTPUT_DIR when it is relative; None means stdout."""
    if cfg.output is None:
        return None
    if os.path.isabs(cfg.output):
        return cfg.output
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV) or os.getcwd(), cfg.output)
