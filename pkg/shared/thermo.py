"""
Gamma-law thermodynamic closure in the variables used throughout the lab.

The specific volume tau and the entropy S are replaced by

    eta = (2 sqrt(K gamma) / (gamma - 1)) * tau^(-(gamma - 1)/2)
    m   = exp(S / (2 c_v))

in which the closure reads tau = K_tau eta^(-2/(gamma-1)),
p = K_p m^2 eta^(2 gamma/(gamma-1)) and c = K_c m eta^((gamma+1)/(gamma-1)).
All functions accept floats or numpy arrays.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

IDENTITY_RTOL = 1e-12


class ThermoConstants(NamedTuple):
    K_tau: float
    K_p: float
    K_c: float


def _require_positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} must be finite and > 0")
    return arr


def derive_constants(K: float, gamma: float) -> ThermoConstants:
    """Return (K_tau, K_p, K_c) for pressure constant K and adiabatic exponent gamma."""
    if not (math.isfinite(K) and K > 0.0):
        raise DomainError(f"K must be > 0, got {K!r}")
    if not (math.isfinite(gamma) and gamma > 1.0):
        raise DomainError(f"gamma must be > 1, got {gamma!r}")

    try:
        K_tau = (2.0 * math.sqrt(K * gamma) / (gamma - 1.0)) ** (2.0 / (gamma - 1.0))
        K_p = K * K_tau ** (-gamma)
        K_c = math.sqrt(K * gamma) * K_tau ** (-(gamma + 1.0) / 2.0)
    except OverflowError as exc:
        raise DomainError(f"constants overflow for K={K!r}, gamma={gamma!r}") from exc

    for name, value in (("K_tau", K_tau), ("K_p", K_p), ("K_c", K_c)):
        if not (math.isfinite(value) and value > 0.0):
            raise DomainError(f"{name} is not a finite positive number for K={K!r}, gamma={gamma!r}")
    return ThermoConstants(K_tau, K_p, K_c)


def check_identities(constants: ThermoConstants, gamma: float, rtol: float = IDENTITY_RTOL) -> bool:
    """K_p = (gamma-1)/(2 gamma) K_c and K_tau K_c = (gamma-1)/2."""
    K_tau, K_p, K_c = constants
    return (
        math.isclose(K_p, (gamma - 1.0) / (2.0 * gamma) * K_c, rel_tol=rtol)
        and math.isclose(K_tau * K_c, (gamma - 1.0) / 2.0, rel_tol=rtol)
    )


@dataclass(frozen=True)
class GasModel:
    """Immutable gamma-law gas. The derived constants are checked on construction."""

    K: float = 1.0
    gamma: float = 1.4
    c_v: float = 1.0
    K_tau: float = field(init=False)
    K_p: float = field(init=False)
    K_c: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.c_v) and self.c_v > 0.0):
            raise DomainError(f"c_v must be > 0, got {self.c_v!r}")
        constants = derive_constants(self.K, self.gamma)
        if not check_identities(constants, self.gamma):
            raise DomainError(f"inconsistent constants for K={self.K!r}, gamma={self.gamma!r}")
        object.__setattr__(self, "K_tau", constants.K_tau)
        object.__setattr__(self, "K_p", constants.K_p)
        object.__setattr__(self, "K_c", constants.K_c)

    @property
    def constants(self) -> ThermoConstants:
        return ThermoConstants(self.K_tau, self.K_p, self.K_c)

    @property
    def eta_scale(self) -> float:
        # eta = eta_scale * tau^(-(gamma-1)/2)
        return 2.0 * math.sqrt(self.K * self.gamma) / (self.gamma - 1.0)

    @property
    def riccati_k1_factor(self) -> float:
        return (self.gamma + 1.0) * self.K_c / (2.0 * (self.gamma - 1.0))

    @property
    def riccati_k2_factor(self) -> float:
        return (self.gamma - 1.0) / (self.gamma * (self.gamma + 1.0))

    @property
    def entropy_gradient_factor(self) -> float:
        # coefficient of m_x * eta in alpha and beta
        return (self.gamma - 1.0) / self.gamma


def eta_from_tau(tau, model: GasModel):
    tau = _require_positive("tau", tau)
    return model.eta_scale * tau ** (-(model.gamma - 1.0) / 2.0)


def tau_from_eta(eta, model: GasModel):
    eta = _require_positive("eta", eta)
    return model.K_tau * eta ** (-2.0 / (model.gamma - 1.0))


def pressure(eta, m, model: GasModel):
    eta = _require_positive("eta", eta)
    m = _require_positive("m", m)
    return model.K_p * m**2 * eta ** (2.0 * model.gamma / (model.gamma - 1.0))


def wave_speed(eta, m, model: GasModel):
    """Lagrangian wave speed c = sqrt(-p_tau)."""
    eta = _require_positive("eta", eta)
    m = _require_positive("m", m)
    return model.K_c * m * eta ** ((model.gamma + 1.0) / (model.gamma - 1.0))


def internal_energy(p, tau, model: GasModel):
    p = _require_positive("p", p)
    tau = _require_positive("tau", tau)
    return p * tau / (model.gamma - 1.0)


def m_from_S(S, c_v: float = 1.0):
    if not c_v > 0.0:
        raise DomainError(f"c_v must be > 0, got {c_v!r}")
    return np.exp(np.asarray(S, dtype=float) / (2.0 * c_v))


def S_from_m(m, c_v: float = 1.0):
    if not c_v > 0.0:
        raise DomainError(f"c_v must be > 0, got {c_v!r}")
    m = _require_positive("m", m)
    return 2.0 * c_v * np.log(m)


@dataclass(frozen=True)
class ThermoState:
    """Pointwise (or array) state in the (u, eta, m) variables with derived quantities."""

    u: object
    eta: object
    m: object
    model: GasModel

    def __post_init__(self):
        _require_positive("eta", self.eta)
        _require_positive("m", self.m)

    @property
    def tau(self):
        return tau_from_eta(self.eta, self.model)

    @property
    def rho(self):
        return 1.0 / self.tau

    @property
    def p(self):
        return pressure(self.eta, self.m, self.model)

    @property
    def c(self):
        return wave_speed(self.eta, self.m, self.model)

    @property
    def S(self):
        return S_from_m(self.m, self.model.c_v)

    @property
    def e(self):
        return internal_energy(self.p, self.tau, self.model)

    @property
    def eulerian_sound_speed(self):
        # sqrt(gamma p / rho) = c * tau
        return self.c * self.tau
