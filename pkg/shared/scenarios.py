# Built-in initial-data scenarios and their parameters
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError, DomainError
from .fields import BOUNDARY_POLICIES, validate_epsilon
from .thermo import GasModel, eta_from_tau, wave_speed

logger = logging.getLogger(__name__)

# Profiles are flat to this many widths; beyond it the far field is constant.
SUPPORT_WIDTHS = 8.0
DOMAIN_MARGIN_WIDTHS = 4.0
WAVE_SPEED_SAFETY = 1.1

SCENARIO_CATALOG = {
    "double_rarefaction": {
        "name": "Double rarefaction",
        "description": "u = u0 + A tanh(x/w): two rarefaction waves moving apart; vacuum-forming when A >= eta0",
        "defaults": {"gamma": 3.0, "amplitude": 2.0, "width": 1.0},
    },
    "compressive_pulse": {
        "name": "Compressive pulse",
        "description": "u = u0 - A tanh(x/w): both families compressive, gradient blowup in finite time",
        "defaults": {"gamma": 3.0, "amplitude": 0.5, "width": 1.0},
    },
    "smooth_periodicish_bump": {
        "name": "Smooth sinusoidal bump",
        "description": "u = u0 + A sin(pi x/w) exp(-(x/w)^2): localized oscillation with mixed signs",
        "defaults": {"gamma": 3.0, "amplitude": 0.1, "width": 1.0},
    },
    "entropy_bump": {
        "name": "Entropy bump",
        "description": ("m = 1 + a exp(-(x/w_s)^2) on top of u = u0 + A tanh(x/w): "
                        "full Euler with finite entropy variation"),
        "defaults": {"gamma": 1.4, "amplitude": 0.5, "width": 1.0,
                     "entropy_amplitude": 0.1, "entropy_width": 1.0, "epsilon": 0.2},
    },
    "user_defined": {
        "name": "User defined",
        "description": "sampled (x, u, tau, m) arrays interpolated onto the grid; constant beyond the samples",
        "defaults": {},
    },
}


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    gamma: float = 1.4
    K: float = 1.0
    c_v: float = 1.0
    amplitude: float = 0.5
    width: float = 1.0
    rho0: float = 1.0
    eta0: Optional[float] = None
    u0: float = 0.0
    entropy_amplitude: float = 0.0
    entropy_width: float = 1.0
    epsilon: Optional[float] = None
    boundary: str = "far_field"
    domain: Optional[Tuple[float, float]] = None
    samples: Optional[Dict[str, np.ndarray]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.name not in SCENARIO_CATALOG:
            raise ConfigError(f"unknown scenario {self.name!r}; see list-scenarios")
        checks = (
            ("gamma", self.gamma > 1.0),
            ("K", self.K > 0.0),
            ("c_v", self.c_v > 0.0),
            ("width", self.width > 0.0),
            ("entropy_width", self.entropy_width > 0.0),
            ("rho0", self.rho0 > 0.0),
            ("entropy_amplitude", self.entropy_amplitude > -1.0),
        )
        for name, ok in checks:
            value = getattr(self, name)
            if not (math.isfinite(value) and ok):
                raise ConfigError(f"invalid scenario parameter {name}={value!r}")
        for name in ("amplitude", "u0"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"scenario parameter {name} must be finite")
        if self.eta0 is not None and not (math.isfinite(self.eta0) and self.eta0 > 0.0):
            raise ConfigError(f"invalid scenario parameter eta0={self.eta0!r}")
        if self.boundary not in BOUNDARY_POLICIES:
            raise ConfigError(f"unknown boundary policy {self.boundary!r}")
        if self.domain is not None:
            lo, hi = self.domain
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ConfigError(f"invalid domain {self.domain!r}")
        if self.epsilon is not None:
            try:
                validate_epsilon(self.epsilon)
            except DomainError as exc:
                raise ConfigError(str(exc)) from exc
        if self.name == "user_defined":
            self._check_samples()

    def _check_samples(self):
        if not self.samples:
            raise ConfigError("user_defined scenario needs sampled arrays (x, u, tau or eta, optional m)")
        try:
            x = np.asarray(self.samples["x"], dtype=float)
            u = np.asarray(self.samples["u"], dtype=float)
        except KeyError as exc:
            raise ConfigError(f"user_defined samples missing column {exc.args[0]!r}") from None
        if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0.0):
            raise ConfigError("user_defined x samples must be strictly increasing")
        if u.shape != x.shape or not np.all(np.isfinite(u)):
            raise ConfigError("user_defined u samples must be finite and match x")
        if "tau" not in self.samples and "eta" not in self.samples:
            raise ConfigError("user_defined samples need a tau or eta column")
        for key in ("tau", "eta", "m"):
            if key in self.samples:
                values = np.asarray(self.samples[key], dtype=float)
                if values.shape != x.shape or not np.all(np.isfinite(values)) or np.any(values <= 0.0):
                    raise ConfigError(f"user_defined {key} samples must be finite, positive and match x")

    @classmethod
    def from_catalog(cls, name: str, **overrides) -> "ScenarioSpec":
        if name not in SCENARIO_CATALOG:
            raise ConfigError(f"unknown scenario {name!r}; see list-scenarios")
        params = dict(SCENARIO_CATALOG[name]["defaults"])
        params.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in fields(cls)}
        unknown = set(params) - known
        if unknown:
            raise ConfigError(f"unknown scenario parameters: {sorted(unknown)}")
        return cls(name=name, **params)

    def with_overrides(self, **overrides) -> "ScenarioSpec":
        return replace(self, **overrides)

    def model(self) -> GasModel:
        return GasModel(K=self.K, gamma=self.gamma, c_v=self.c_v)

    def background_eta(self, model: GasModel) -> float:
        if self.eta0 is not None:
            return float(self.eta0)
        return float(eta_from_tau(1.0 / self.rho0, model))

    def as_record(self) -> dict:
        record = {k: v for k, v in asdict(self).items() if k not in ("samples", "domain")}
        if self.domain is not None:
            record["x_min"], record["x_max"] = self.domain
        return record


def entropy_profile(spec: ScenarioSpec, x: np.ndarray) -> np.ndarray:
    return 1.0 + spec.entropy_amplitude * np.exp(-((x / spec.entropy_width) ** 2))


def initial_profiles(spec: ScenarioSpec, x: np.ndarray, model: GasModel):
    """(u, eta, m) node arrays of the scenario at t = 0."""
    x = np.asarray(x, dtype=float)
    A, w = spec.amplitude, spec.width
    eta0 = spec.background_eta(model)
    eta = np.full_like(x, eta0)
    m = entropy_profile(spec, x)

    if spec.name in ("double_rarefaction", "entropy_bump"):
        u = spec.u0 + A * np.tanh(x / w)
    elif spec.name == "compressive_pulse":
        u = spec.u0 - A * np.tanh(x / w)
    elif spec.name == "smooth_periodicish_bump":
        u = spec.u0 + A * np.sin(np.pi * x / w) * np.exp(-((x / w) ** 2))
    elif spec.name == "user_defined":
        samples = spec.samples
        xs = np.asarray(samples["x"], dtype=float)
        u = np.interp(x, xs, np.asarray(samples["u"], dtype=float))
        if "eta" in samples:
            eta = np.interp(x, xs, np.asarray(samples["eta"], dtype=float))
        else:
            eta = eta_from_tau(np.interp(x, xs, np.asarray(samples["tau"], dtype=float)), model)
        if "m" in samples:
            m = np.interp(x, xs, np.asarray(samples["m"], dtype=float))
    else:
        raise ConfigError(f"unknown scenario {spec.name!r}")
    return u, eta, m


def support_half_width(spec: ScenarioSpec) -> float:
    if spec.name == "user_defined":
        xs = np.asarray(spec.samples["x"], dtype=float)
        return float(max(abs(xs[0]), abs(xs[-1])))
    widths = [spec.width]
    if spec.entropy_amplitude != 0.0:
        widths.append(spec.entropy_width)
    return SUPPORT_WIDTHS * max(widths)


def far_field_wave_speed(spec: ScenarioSpec, model: GasModel) -> float:
    """c of the faster far-field state; the outer edges of any disturbance travel at it."""
    half = support_half_width(spec)
    _, eta, m = initial_profiles(spec, np.array([-half, half]), model)
    return WAVE_SPEED_SAFETY * float(np.max(wave_speed(eta, m, model)))


def domain_half_width(spec: ScenarioSpec, model: GasModel, t_end: float) -> float:
    """Support plus the distance the edge characteristics cover by t_end, plus a margin."""
    margin = DOMAIN_MARGIN_WIDTHS * spec.width
    return support_half_width(spec) + far_field_wave_speed(spec, model) * max(t_end, 0.0) + margin


def domain_for(spec: ScenarioSpec, model: GasModel, t_end: float) -> Tuple[float, float]:
    if spec.domain is not None:
        return spec.domain
    half = domain_half_width(spec, model, t_end)
    return -half, half
