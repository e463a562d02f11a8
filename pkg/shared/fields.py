"""
Grid-sampled state (u, eta, m) and the quantities derived from it by spatial
differentiation: Riemann invariants s, r and gradient variables alpha, beta and
their entropy-weighted versions alpha_eps, beta_eps.

Derivatives are fourth-order central differences. Two ghost nodes per side are
filled according to the boundary policy: "far_field" repeats the boundary node
value (constant far-field state), "periodic" wraps around.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError
from .thermo import GasModel, pressure, tau_from_eta, wave_speed

logger = logging.getLogger(__name__)

MIN_CELLS = 16
GHOSTS = 2
BOUNDARY_POLICIES = ("far_field", "periodic")


def validate_epsilon(epsilon: float) -> float:
    """The entropy weight must satisfy 0 < epsilon < 1/4."""
    if epsilon is None or not math.isfinite(epsilon) or not (0.0 < epsilon < 0.25):
        raise DomainError(f"epsilon must lie in (0, 1/4), got {epsilon!r}")
    return float(epsilon)


def validate_boundary(boundary: str) -> str:
    if boundary not in BOUNDARY_POLICIES:
        raise DomainError(f"unknown boundary policy {boundary!r}; expected one of {BOUNDARY_POLICIES}")
    return boundary


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred grid in the Lagrangian (mass) coordinate."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < MIN_CELLS:
            raise DomainError(f"grid needs at least {MIN_CELLS} cells, got {self.n!r}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max) and self.x_max > self.x_min):
            raise DomainError(f"invalid grid bounds [{self.x_min!r}, {self.x_max!r}]")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @cached_property
    def x(self) -> np.ndarray:
        nodes = self.x_min + (np.arange(self.n) + 0.5) * self.h
        nodes.setflags(write=False)
        return nodes

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "Grid1D":
        return cls(-half_width, half_width, n)


def pad(f: np.ndarray, boundary: str, ghosts: int = GHOSTS) -> np.ndarray:
    mode = "wrap" if boundary == "periodic" else "edge"
    return np.pad(f, ghosts, mode=mode)


def central_derivative(f: np.ndarray, h: float, boundary: str = "far_field") -> np.ndarray:
    """Fourth-order central first derivative on a uniform grid."""
    g = pad(np.asarray(f, dtype=float), boundary)
    # differences first, so a constant array differentiates to exactly zero
    return (8.0 * (g[3:-1] - g[1:-3]) - (g[4:] - g[:-4])) / (12.0 * h)


def gradient_variables(ux, eta, eta_x, m, m_x, gamma: float):
    """alpha = u_x + m eta_x + ((gamma-1)/gamma) m_x eta, beta = u_x - (same)."""
    entropy_term = (gamma - 1.0) / gamma * m_x * eta
    wave_term = m * eta_x + entropy_term
    return ux + wave_term, ux - wave_term


def eps_weight(eta, epsilon: float, gamma: float):
    """eta^(2 eps/(gamma-1)), the factor turning alpha into alpha_eps."""
    return np.asarray(eta, dtype=float) ** (2.0 * epsilon / (gamma - 1.0))


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FieldSnapshot:
    """State at one time. Arrays are read-only; derived arrays are computed once on demand."""

    t: float
    u: np.ndarray
    eta: np.ndarray
    m: np.ndarray
    grid: Grid1D
    model: GasModel
    boundary: str = "far_field"
    _scaled: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        validate_boundary(self.boundary)
        for name in ("u", "eta", "m"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (self.grid.n,):
                raise DomainError(f"{name} has shape {arr.shape}, expected ({self.grid.n},)")
            object.__setattr__(self, name, arr)
        if not np.all(np.isfinite(self.u)):
            raise DomainError("u must be finite")
        if not np.all(np.isfinite(self.eta)) or np.any(self.eta <= 0.0):
            raise DomainError("eta must be finite and > 0 at every node")
        if not np.all(np.isfinite(self.m)) or np.any(self.m <= 0.0):
            raise DomainError("m must be finite and > 0 at every node")

    def replace(self, **changes) -> "FieldSnapshot":
        values = dict(t=self.t, u=self.u, eta=self.eta, m=self.m, grid=self.grid,
                      model=self.model, boundary=self.boundary)
        values.update(changes)
        return FieldSnapshot(**values)

    def derivative(self, f: np.ndarray) -> np.ndarray:
        return central_derivative(f, self.grid.h, self.boundary)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @cached_property
    def ux(self) -> np.ndarray:
        return self.derivative(self.u)

    @cached_property
    def eta_x(self) -> np.ndarray:
        return self.derivative(self.eta)

    @cached_property
    def m_x(self) -> np.ndarray:
        return self.derivative(self.m)

    @cached_property
    def is_isentropic(self) -> bool:
        return bool(np.all(self.m == self.m[0]))

    @cached_property
    def tau(self) -> np.ndarray:
        return tau_from_eta(self.eta, self.model)

    @cached_property
    def rho(self) -> np.ndarray:
        return 1.0 / self.tau

    @cached_property
    def p(self) -> np.ndarray:
        return pressure(self.eta, self.m, self.model)

    @cached_property
    def c(self) -> np.ndarray:
        return wave_speed(self.eta, self.m, self.model)

    @cached_property
    def s(self) -> np.ndarray:
        return self.u + self.m * self.eta

    @cached_property
    def r(self) -> np.ndarray:
        return self.u - self.m * self.eta

    @cached_property
    def _gradients(self):
        return gradient_variables(self.ux, self.eta, self.eta_x, self.m, self.m_x, self.model.gamma)

    @property
    def alpha(self) -> np.ndarray:
        return self._gradients[0]

    @property
    def beta(self) -> np.ndarray:
        return self._gradients[1]

    def scaled(self, epsilon: float):
        """(alpha_eps, beta_eps) for the given entropy weight, cached per epsilon."""
        epsilon = validate_epsilon(epsilon)
        if epsilon not in self._scaled:
            weight = eps_weight(self.eta, epsilon, self.model.gamma)
            self._scaled[epsilon] = (weight * self.alpha, weight * self.beta)
        return self._scaled[epsilon]


def riemann_invariants(snapshot: FieldSnapshot):
    """s = u + m eta, r = u - m eta."""
    return snapshot.s, snapshot.r


def compute_gradients(snapshot: FieldSnapshot, model: GasModel = None):
    """(alpha, beta) of the snapshot. A model other than the snapshot's recomputes with its gamma."""
    if model is None or model == snapshot.model:
        return snapshot.alpha, snapshot.beta
    return gradient_variables(snapshot.ux, snapshot.eta, snapshot.eta_x, snapshot.m, snapshot.m_x, model.gamma)


def scaled_gradients(snapshot: FieldSnapshot, epsilon: float, model: GasModel = None):
    """(alpha_eps, beta_eps) = eta^(2 eps/(gamma-1)) * (alpha, beta)."""
    if model is None or model == snapshot.model:
        return snapshot.scaled(epsilon)
    epsilon = validate_epsilon(epsilon)
    alpha, beta = compute_gradients(snapshot, model)
    weight = eps_weight(snapshot.eta, epsilon, model.gamma)
    return weight * alpha, weight * beta
