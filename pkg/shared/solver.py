"""
Method-of-lines integrator for smooth Lagrangian Euler flow.

Both systems are evolved in the (eta, u) variables with the entropy variable m
stationary:

    eta_t + (c/m) u_x = 0
    u_t + p_x = 0                 (= m c eta_x + 2 (p/m) m_x)
    m_t = 0

The momentum equation is differenced in flux form, so the discrete integral of
u changes only through the boundary pressures. The p-system drops the m_x part
by differencing the isentropic pressure and scaling with m^2; for m == 1 the
two right-hand sides agree bit for bit. Spatial derivatives are
fourth-order central differences, time stepping is classical RK4, and there is
no artificial viscosity: runs are stopped before a shock forms.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .errors import BlowupSuspected, CFLViolation, ConfigError, DomainError
from .fields import FieldSnapshot, Grid1D, central_derivative, pad, validate_boundary
from .scenarios import ScenarioSpec, domain_for, domain_half_width, initial_profiles
from .thermo import GasModel

logger = logging.getLogger(__name__)

DEFAULT_CFL = 0.4
DEFAULT_STRIDE = 10
DEFAULT_UX_BLOWUP_FACTOR = 1e3
DEFAULT_RHO_FLOOR_FACTOR = 1e-6
DEFAULT_FRONT_CELLS = 2.0
# the front criterion only applies once the gradient has grown this much
FRONT_GROWTH = 4.0
# cells on each side of the steepest point used to measure its jump
FRONT_WINDOW = 8
# s and r are transported, so their total variation is constant while the flow is smooth
TV_GROWTH = 1e-2
CFL_TOLERANCE = 1e-12

PSYSTEM = "psystem"
FULL = "full"
SYSTEMS = (PSYSTEM, FULL)


class StopReason(str, Enum):
    HORIZON = "horizon_reached"
    BLOWUP = "blowup_suspected"
    DENSITY_FLOOR = "density_floor_reached"


@dataclass(frozen=True)
class SolverConfig:
    cfl: float = DEFAULT_CFL
    t_end: float = 1.0
    stride: int = DEFAULT_STRIDE
    ux_blowup_factor: float = DEFAULT_UX_BLOWUP_FACTOR
    rho_floor_factor: float = DEFAULT_RHO_FLOOR_FACTOR
    front_cells: float = DEFAULT_FRONT_CELLS
    boundary: Optional[str] = None
    system: Optional[str] = None
    max_steps: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.cfl < 1.0):
            raise ConfigError(f"cfl must lie in (0, 1), got {self.cfl!r}")
        if not (math.isfinite(self.t_end) and self.t_end >= 0.0):
            raise ConfigError(f"t_end must be >= 0, got {self.t_end!r}")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigError(f"stride must be a positive integer, got {self.stride!r}")
        if not self.ux_blowup_factor > 1.0:
            raise ConfigError("ux_blowup_factor must be > 1")
        if not (0.0 < self.rho_floor_factor < 1.0):
            raise ConfigError("rho_floor_factor must lie in (0, 1)")
        if not self.front_cells > 0.0:
            raise ConfigError("front_cells must be > 0")
        if self.boundary is not None:
            try:
                validate_boundary(self.boundary)
            except DomainError as exc:
                raise ConfigError(str(exc)) from exc
        if self.system is not None and self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}, got {self.system!r}")


@dataclass
class SolutionHistory:
    """Time-ordered immutable snapshots of one run. m is shared by every snapshot."""

    grid: Grid1D
    model: GasModel
    system: str
    config: SolverConfig
    snapshots: List[FieldSnapshot] = field(default_factory=list)
    stop_reason: StopReason = StopReason.HORIZON
    stop_detail: str = ""
    t_stop: float = 0.0
    steps: int = 0
    # derived helpers (e.g. the space-time interpolator); cleared whenever a snapshot is added
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def append(self, snapshot: FieldSnapshot):
        if self.snapshots:
            last = self.snapshots[-1]
            if not snapshot.t > last.t:
                raise DomainError(f"stored times must increase: {snapshot.t!r} after {last.t!r}")
            if not np.array_equal(snapshot.m, self.snapshots[0].m):
                raise DomainError("entropy variable m changed between snapshots")
        self.snapshots.append(snapshot)
        self.cache.clear()

    @property
    def times(self) -> np.ndarray:
        return np.array([snap.t for snap in self.snapshots])

    @property
    def initial(self) -> FieldSnapshot:
        return self.snapshots[0]

    @property
    def final(self) -> FieldSnapshot:
        return self.snapshots[-1]

    @property
    def boundary(self) -> str:
        return self.snapshots[0].boundary

    @property
    def t_end(self) -> float:
        return self.config.t_end

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def __getitem__(self, index):
        return self.snapshots[index]


def system_of(snapshot: FieldSnapshot) -> str:
    return PSYSTEM if snapshot.is_isentropic else FULL


def init_scenario(spec: ScenarioSpec, grid: Grid1D, model: GasModel) -> FieldSnapshot:
    """t = 0 snapshot of a scenario on the given grid."""
    u, eta, m = initial_profiles(spec, grid.x, model)
    try:
        snapshot = FieldSnapshot(t=0.0, u=u, eta=eta, m=m, grid=grid, model=model, boundary=spec.boundary)
    except DomainError as exc:
        raise ConfigError(f"scenario {spec.name!r} gives invalid initial data: {exc}") from exc
    if not (np.all(np.isfinite(snapshot.alpha)) and np.all(np.isfinite(snapshot.beta))):
        raise ConfigError(f"scenario {spec.name!r} gives unbounded initial gradients")
    return snapshot


def build_grid(spec: ScenarioSpec, model: GasModel, n: int, t_end: float) -> Grid1D:
    if spec.domain is not None:
        return Grid1D(spec.domain[0], spec.domain[1], n)
    return Grid1D.symmetric(domain_half_width(spec, model, t_end), n)


def _rhs(u, eta, m, h, model: GasModel, boundary: str, system: str):
    gamma = model.gamma
    c = model.K_c * m * eta ** ((gamma + 1.0) / (gamma - 1.0))
    u_x = central_derivative(u, h, boundary)
    d_eta = -(c / m) * u_x
    isentropic = model.K_p * eta ** (2.0 * gamma / (gamma - 1.0))
    if system == FULL:
        d_u = -central_derivative(m**2 * isentropic, h, boundary)
    else:
        d_u = -(m**2) * central_derivative(isentropic, h, boundary)
    return d_u, d_eta


def time_derivatives(snapshot: FieldSnapshot, system: Optional[str] = None):
    """(u_t, eta_t) of the semi-discrete system at a snapshot."""
    system = system or system_of(snapshot)
    return _rhs(snapshot.u, snapshot.eta, snapshot.m, snapshot.grid.h, snapshot.model, snapshot.boundary, system)


def stable_dt(snapshot: FieldSnapshot, cfl: float = DEFAULT_CFL) -> float:
    return cfl * snapshot.grid.h / float(np.max(snapshot.c))


def step(snapshot: FieldSnapshot, dt: float, model: GasModel = None, config: SolverConfig = None,
         system: Optional[str] = None) -> FieldSnapshot:
    """One RK4 step of the method-of-lines system; m is carried over unchanged."""
    config = config or SolverConfig()
    model = model or snapshot.model
    system = system or config.system or system_of(snapshot)
    dt_max = stable_dt(snapshot, config.cfl)
    if not (dt > 0.0) or dt > dt_max * (1.0 + CFL_TOLERANCE):
        raise CFLViolation(dt, dt_max)

    m, h, bc = snapshot.m, snapshot.grid.h, snapshot.boundary
    u0, eta0 = snapshot.u, snapshot.eta
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        k1u, k1e = _rhs(u0, eta0, m, h, model, bc, system)
        k2u, k2e = _rhs(u0 + 0.5 * dt * k1u, eta0 + 0.5 * dt * k1e, m, h, model, bc, system)
        k3u, k3e = _rhs(u0 + 0.5 * dt * k2u, eta0 + 0.5 * dt * k2e, m, h, model, bc, system)
        k4u, k4e = _rhs(u0 + dt * k3u, eta0 + dt * k3e, m, h, model, bc, system)
        u1 = u0 + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        eta1 = eta0 + dt / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)

    t1 = snapshot.t + dt
    if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(eta1))):
        raise BlowupSuspected(t1, "non-finite state")
    if np.any(eta1 <= 0.0):
        raise BlowupSuspected(t1, "eta left positivity")
    return FieldSnapshot(t=t1, u=u1, eta=eta1, m=m, grid=snapshot.grid, model=model, boundary=bc)


def riemann_variation(snapshot: FieldSnapshot):
    """Total variation of s and r over the grid."""
    return float(np.sum(np.abs(np.diff(snapshot.s)))), float(np.sum(np.abs(np.diff(snapshot.r))))


def _blowup_check(snapshot: FieldSnapshot, ux_scale: float, variation0, config: SolverConfig,
                  system: str) -> Optional[str]:
    ux = np.abs(snapshot.ux)
    i = int(np.argmax(ux))
    ux_max = float(ux[i])
    if ux_scale > 0.0 and ux_max > config.ux_blowup_factor * ux_scale:
        return f"max|u_x|={ux_max:.6g} exceeds {config.ux_blowup_factor:g} x initial scale"
    if ux_scale > 0.0 and ux_max > FRONT_GROWTH * ux_scale:
        # jump carried by the steepest front, not the range of the whole field
        near = snapshot.u[max(i - FRONT_WINDOW, 0): i + FRONT_WINDOW + 1]
        jump = float(np.max(near) - np.min(near))
        if ux_max * snapshot.grid.h * config.front_cells > jump:
            return (f"front narrower than {config.front_cells:g} cells "
                    f"(max|u_x|={ux_max:.6g} at x={snapshot.x[i]:.6g})")
    if system == PSYSTEM:
        for name, before, now in zip(("s", "r"), variation0, riemann_variation(snapshot)):
            if before > 0.0 and now > (1.0 + TV_GROWTH) * before:
                return f"total variation of {name} grew by {now / before - 1.0:.3g} (grid-scale oscillation)"
    return None


def run(spec: ScenarioSpec, grid: Grid1D, model: GasModel, config: SolverConfig) -> SolutionHistory:
    """Integrate from the scenario's initial data until t_end or a stop criterion."""
    if config.boundary is not None and config.boundary != spec.boundary:
        spec = spec.with_overrides(boundary=config.boundary)
    snapshot = init_scenario(spec, grid, model)
    system = config.system or system_of(snapshot)
    history = SolutionHistory(grid=grid, model=model, system=system, config=config)
    history.append(snapshot)

    ux_scale = float(np.max(np.abs(snapshot.ux)))
    variation0 = riemann_variation(snapshot)
    rho_min0 = float(np.min(snapshot.rho))
    steps_since_store = 0
    logger.info("run %s: n=%d, h=%.4g, system=%s, t_end=%g", spec.name, grid.n, grid.h, system, config.t_end)

    while snapshot.t < config.t_end:
        if config.max_steps is not None and history.steps >= config.max_steps:
            logger.warning("max_steps=%d reached at t=%.6g", config.max_steps, snapshot.t)
            break
        dt = min(stable_dt(snapshot, config.cfl), config.t_end - snapshot.t)
        try:
            snapshot = step(snapshot, dt, model, config, system)
        except BlowupSuspected as exc:
            history.stop_reason = StopReason.BLOWUP
            history.stop_detail = exc.reason
            history.t_stop = exc.t
            break
        history.steps += 1
        steps_since_store += 1

        if snapshot.t >= config.t_end:
            snapshot = snapshot.replace(t=config.t_end)

        detail = _blowup_check(snapshot, ux_scale, variation0, config, system)
        if detail is not None:
            history.stop_reason, history.stop_detail = StopReason.BLOWUP, detail
        elif float(np.min(snapshot.rho)) < config.rho_floor_factor * rho_min0:
            history.stop_reason = StopReason.DENSITY_FLOOR
            history.stop_detail = f"min rho below {config.rho_floor_factor:g} x initial minimum"
        if detail is not None or history.stop_reason is StopReason.DENSITY_FLOOR:
            history.append(snapshot)
            history.t_stop = snapshot.t
            break

        if steps_since_store >= config.stride or snapshot.t >= config.t_end:
            history.append(snapshot)
            steps_since_store = 0
            logger.debug("t=%.6g step=%d min rho=%.6g max|u_x|=%.6g", snapshot.t, history.steps,
                         float(np.min(snapshot.rho)), float(np.max(np.abs(snapshot.ux))))

    if history.final is not snapshot:
        # last valid state, e.g. before a failed step
        history.append(snapshot)
    if history.stop_reason is StopReason.HORIZON:
        history.t_stop = history.final.t
    logger.info("run %s stopped: %s at t=%.6g after %d steps (%s)", spec.name, history.stop_reason.value,
                history.t_stop, history.steps, history.stop_detail or "ok")
    return history


def conservation_drift(history: SolutionHistory) -> dict:
    """Relative drift of the discrete integrals of tau and u against the exact far-field fluxes."""
    first = history.initial
    h = history.grid.h
    if history.boundary == "periodic":
        tau_flux, u_flux = 0.0, 0.0
    else:
        tau_flux = float(first.u[-1] - first.u[0])
        u_flux = -float(first.p[-1] - first.p[0])
    tau0 = h * float(np.sum(first.tau))
    u0 = h * float(np.sum(first.u))
    u_scale = max(abs(u0), h * float(np.sum(np.abs(first.u))), np.finfo(float).tiny)

    tau_drift, u_drift = 0.0, 0.0
    for snap in history.snapshots[1:]:
        dt = snap.t - first.t
        tau_drift = max(tau_drift, abs(h * float(np.sum(snap.tau)) - tau0 - tau_flux * dt) / abs(tau0))
        u_drift = max(u_drift, abs(h * float(np.sum(snap.u)) - u0 - u_flux * dt) / u_scale)
    return {"tau": tau_drift, "u": u_drift}


def restrict_to_coarse(fine: np.ndarray, boundary: str) -> np.ndarray:
    """Fourth-order interpolation of a cell-centred field onto the centres of the 2x coarser grid."""
    g = pad(np.asarray(fine, dtype=float), boundary)
    # coarse centre i sits midway between fine cells 2i and 2i+1 (offset by the ghosts)
    i = np.arange(fine.size // 2) * 2 + 2
    return (-g[i - 1] + 9.0 * g[i] + 9.0 * g[i + 1] - g[i + 2]) / 16.0


def self_convergence(spec: ScenarioSpec, model: GasModel, config: SolverConfig, ns: Sequence[int],
                     domain=None) -> dict:
    """Max-norm self-convergence orders of u and eta for a sequence of doubling grids."""
    ns = list(ns)
    if len(ns) < 3 or any(b != 2 * a for a, b in zip(ns, ns[1:])):
        raise DomainError("need at least three doubling grid sizes")
    x_min, x_max = domain or domain_for(spec, model, config.t_end)
    finals = []
    for n in ns:
        history = run(spec, Grid1D(x_min, x_max, n), model, config)
        if history.stop_reason is not StopReason.HORIZON:
            raise DomainError(f"run at n={n} stopped early: {history.stop_reason.value}")
        finals.append(history.final)

    errors = {"u": [], "eta": []}
    for coarse, fine in zip(finals, finals[1:]):
        for name in errors:
            diff = getattr(coarse, name) - restrict_to_coarse(getattr(fine, name), coarse.boundary)
            errors[name].append(float(np.max(np.abs(diff))))
    orders = {name: [math.log2(a / b) for a, b in zip(errs, errs[1:])] for name, errs in errors.items()}
    return {"ns": ns, "errors": errors, "orders": orders}
