# Configuration for the lab: command registry, run configuration and environment settings
import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Mapping, Optional, Tuple

import pandas as pd
from dotenv import dotenv_values

from .errors import ConfigError, DomainError
from .fields import validate_epsilon
from .scenarios import SCENARIO_CATALOG, ScenarioSpec
from .solver import (DEFAULT_CFL, DEFAULT_FRONT_CELLS, DEFAULT_RHO_FLOOR_FACTOR, DEFAULT_STRIDE,
                     DEFAULT_UX_BLOWUP_FACTOR, SolverConfig)

logger = logging.getLogger(__name__)

OUT_ENV = "EULER1D_OUT"
LOG_LEVEL_ENV = "EULER1D_LOG_LEVEL"
DEFAULT_OUT = "runs"
DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_N = 1024
DEFAULT_T_END = 1.0


def get_output_dir(cli_value: Optional[str] = None, file_value: Optional[str] = None) -> Path:
    """--out flag, then EULER1D_OUT, then the config file, then ./runs."""
    if cli_value:
        return Path(cli_value)
    env_value = os.getenv(OUT_ENV)
    if env_value:
        logger.info("output directory taken from %s=%s", OUT_ENV, env_value)
        return Path(env_value)
    if file_value:
        return Path(file_value)
    return Path(DEFAULT_OUT)


def get_log_level(cli_value: Optional[str] = None) -> str:
    return (cli_value or os.getenv(LOG_LEVEL_ENV) or DEFAULT_LOG_LEVEL).upper()


# Subcommands exposed by main.py
COMMANDS_CONFIG = {
    "simulate": {
        "name": "Simulate",
        "description": "Run the solver on a scenario and store snapshots plus the run manifest",
    },
    "verify": {
        "name": "Verify",
        "description": "Evaluate every monitor on a stored run; exit 0 iff all verdicts pass",
    },
    "trace": {
        "name": "Trace",
        "description": "Trace characteristics from seed points through a stored run",
    },
    "fit": {
        "name": "Fit",
        "description": "Fit the decay exponent of min rho over a time window",
    },
    "list-scenarios": {
        "name": "List scenarios",
        "description": "Print the built-in scenario catalog",
    },
}

# Run status tracking, recorded in the manifest
RUN_STATUSES = {
    "running": "Running",
    "completed": "Completed",
    "failed": "Failed",
}

# key -> help text; every key is accepted in a config file and as a --flag
CONFIG_KEYS = {
    "scenario": "scenario name (see list-scenarios)",
    "gamma": "adiabatic exponent, > 1",
    "K": "pressure constant, > 0",
    "c_v": "specific heat at constant volume, > 0",
    "n": f"number of grid cells (default {DEFAULT_N})",
    "amplitude": "velocity amplitude A of the scenario profile",
    "width": "profile width w, > 0",
    "rho0": "background density (default 1)",
    "eta0": "background eta, overrides rho0",
    "u0": "background velocity",
    "entropy_amplitude": "amplitude a of m = 1 + a exp(-(x/w_s)^2)",
    "entropy_width": "entropy profile width w_s",
    "epsilon": "entropy weight for the full Euler monitors, in (0, 1/4)",
    "boundary": "far_field or periodic",
    "cfl": f"CFL number (default {DEFAULT_CFL})",
    "t_end": f"final time (default {DEFAULT_T_END})",
    "stride": f"store every k-th step (default {DEFAULT_STRIDE})",
    "ux_blowup_factor": f"blowup stop when max|u_x| exceeds this x initial (default {DEFAULT_UX_BLOWUP_FACTOR:g})",
    "rho_floor_factor": f"stop when min rho drops below this x initial (default {DEFAULT_RHO_FLOOR_FACTOR:g})",
    "front_cells": f"blowup stop when a front is narrower than this many cells (default {DEFAULT_FRONT_CELLS:g})",
    "slack": "monitor slack; default is the recorded refinement slack or 1e-6",
    "out": f"output directory (overridden by ${OUT_ENV} and --out; default ./{DEFAULT_OUT})",
    "run_id": "run directory name (default <scenario>_<config hash>)",
    "samples": "CSV with columns x, u, tau or eta, optional m (user_defined scenario)",
    "seeds": "comma-separated seed positions for tracing",
    "family": "characteristic family: + or -",
    "t0": "start time of traced characteristics (default first stored time)",
    "window": "decay fit window t_a,t_b (default 5,50)",
}

SCENARIO_KEYS = ("gamma", "K", "c_v", "amplitude", "width", "rho0", "eta0", "u0",
                 "entropy_amplitude", "entropy_width", "epsilon", "boundary")
SOLVER_KEYS = ("cfl", "t_end", "stride", "ux_blowup_factor", "rho_floor_factor", "front_cells")
# keys that do not change the computed history
OUTPUT_ONLY_KEYS = ("out", "run_id", "slack", "seeds", "family", "t0", "window")


def parse_floats(value) -> Tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in str(value).replace(";", ",").split(",") if v.strip())


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    gamma: Optional[float] = None
    K: Optional[float] = None
    c_v: Optional[float] = None
    n: int = DEFAULT_N
    amplitude: Optional[float] = None
    width: Optional[float] = None
    rho0: Optional[float] = None
    eta0: Optional[float] = None
    u0: Optional[float] = None
    entropy_amplitude: Optional[float] = None
    entropy_width: Optional[float] = None
    epsilon: Optional[float] = None
    boundary: Optional[str] = None
    cfl: float = DEFAULT_CFL
    t_end: float = DEFAULT_T_END
    stride: int = DEFAULT_STRIDE
    ux_blowup_factor: float = DEFAULT_UX_BLOWUP_FACTOR
    rho_floor_factor: float = DEFAULT_RHO_FLOOR_FACTOR
    front_cells: float = DEFAULT_FRONT_CELLS
    slack: Optional[float] = None
    out: Optional[str] = None
    run_id: Optional[str] = None
    samples: Optional[str] = None
    seeds: Tuple[float, ...] = ()
    family: str = "+"
    t0: Optional[float] = None
    window: Tuple[float, float] = (5.0, 50.0)

    def __post_init__(self):
        if not self.scenario:
            raise ConfigError("a scenario name is required")
        if self.scenario not in SCENARIO_CATALOG:
            raise ConfigError(f"unknown scenario {self.scenario!r}; see list-scenarios")
        if self.n < 16:
            raise ConfigError(f"n must be >= 16, got {self.n!r}")
        if self.epsilon is not None:
            try:
                validate_epsilon(self.epsilon)
            except DomainError as exc:
                raise ConfigError(str(exc)) from exc
        if self.family not in ("+", "-"):
            raise ConfigError(f"family must be '+' or '-', got {self.family!r}")
        if len(self.window) != 2:
            raise ConfigError(f"window needs two values t_a,t_b, got {self.window!r}")
        if self.slack is not None and not self.slack >= 0.0:
            raise ConfigError(f"slack must be >= 0, got {self.slack!r}")
        # validates every scenario and solver parameter before any numerics run
        self.scenario_spec()
        self.solver_config()

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "RunConfig":
        """Build from string or typed values; dashes in keys are accepted, empty values are ignored."""
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for raw_key, raw_value in mapping.items():
            key = raw_key.strip().replace("-", "_")
            if key == "k":
                key = "K"
            if key not in types:
                raise ConfigError(f"unknown configuration key {raw_key!r}")
            if raw_value is None or (isinstance(raw_value, str) and not raw_value.strip()):
                continue
            try:
                values[key] = _coerce(key, raw_value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid value for {key}: {raw_value!r}") from exc
        if "scenario" not in values:
            raise ConfigError("a scenario name is required (--scenario or scenario=...)")
        return cls(**values)

    def merged(self, mapping: Mapping) -> "RunConfig":
        record = {k: v for k, v in asdict(self).items() if v is not None}
        record.update({k: v for k, v in mapping.items() if v is not None})
        return RunConfig.from_mapping(record)

    def _load_samples(self):
        if self.samples is None:
            return None
        path = Path(self.samples)
        if not path.is_file():
            raise ConfigError(f"samples file {path} not found")
        frame = pd.read_csv(path)
        return {column: frame[column].to_numpy(dtype=float) for column in frame.columns}

    def scenario_spec(self) -> ScenarioSpec:
        overrides = {key: getattr(self, key) for key in SCENARIO_KEYS}
        if self.scenario == "user_defined":
            overrides["samples"] = self._load_samples()
        return ScenarioSpec.from_catalog(self.scenario, **overrides)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**{key: getattr(self, key) for key in SOLVER_KEYS}, boundary=self.boundary)

    def as_record(self) -> dict:
        record = asdict(self)
        record["seeds"] = ",".join(repr(s) for s in self.seeds)
        record["window"] = ",".join(repr(w) for w in self.window)
        return record

    def digest(self) -> str:
        """SHA-1 of everything that determines the computed history."""
        record = {k: v for k, v in self.as_record().items() if k not in OUTPUT_ONLY_KEYS}
        if self.samples is not None:
            record["samples"] = hashlib.sha1(Path(self.samples).read_bytes()).hexdigest()
        return hashlib.sha1(json.dumps(record, sort_keys=True).encode()).hexdigest()

    def default_run_id(self) -> str:
        return f"{self.scenario}_{self.digest()[:8]}"


def _coerce(key: str, value):
    if key in ("scenario", "boundary", "out", "run_id", "samples"):
        return str(value).strip()
    if key == "family":
        text = str(value).strip()
        return {"plus": "+", "forward": "+", "minus": "-", "backward": "-"}.get(text, text)
    if key in ("n", "stride"):
        number = float(value)
        if not number.is_integer():
            raise ValueError(f"{key} must be an integer")
        return int(number)
    if key == "seeds":
        return parse_floats(value)
    if key == "window":
        return parse_floats(value)
    return float(value)


def load_config_file(path) -> dict:
    """Flat key=value file (comments with #). Missing files are a configuration error."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return {key: value for key, value in dotenv_values(path).items()}


def config_from_args(args) -> Tuple[RunConfig, Path]:
    """RunConfig from --config plus explicit flags, and the resolved output directory."""
    mapping = load_config_file(args.config) if getattr(args, "config", None) else {}
    file_out = mapping.get("out")
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    config = RunConfig.from_mapping(mapping)
    return config, get_output_dir(getattr(args, "out", None), file_out)
