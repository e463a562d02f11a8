"""
Characteristic tracing through a stored solution and Riccati integration
along the traced curves.

Forward (+) characteristics solve dx/dt = c, backward (-) ones dx/dt = -c.
Along them the gradient variables obey Riccati equations

    d alpha/dt = k1 { k2 (3 alpha + beta) + alpha beta - alpha^2 }      (+ family)
    d beta/dt  = k1 { -k2 (alpha + 3 beta) + alpha beta - beta^2 }      (- family)

with k2 = 0 for the isentropic p-system, and the entropy-weighted versions

    d a_eps/dt = k1e { k2e (3 a - 4 eps a + b) + (1 - 4 eps/(gamma+1)) a b - a^2 }
    d b_eps/dt = k1e { -k2e (a + 3 b - 4 eps b) + (1 - 4 eps/(gamma+1)) a b - b^2 }

The partner gradient (beta on a forward path, alpha on a backward one) is read
from the stored field, never co-integrated.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, HistoryBoundsError
from .fields import eps_weight, gradient_variables, pad, validate_epsilon
from .solver import PSYSTEM, SolutionHistory, time_derivatives
from .thermo import GasModel

logger = logging.getLogger(__name__)

FORWARD = 1
BACKWARD = -1
PATH_CFL = 0.5
# Riccati integration stops once a single step would change the value by this fraction
STEP_RESOLUTION = 0.1
BLOWUP_MAGNITUDE = 1.0 / math.sqrt(np.finfo(float).eps)
TIME_TOLERANCE = 1e-12
# gradients above -SEED_TOLERANCE x max|gradient| are not treated as compressive
SEED_TOLERANCE = 1e-8

# cubic Lagrange weights on the stencil offsets -1, 0, 1, 2 for theta in [0, 1)
def _lagrange_weights(theta: float) -> np.ndarray:
    return np.array([
        -theta * (theta - 1.0) * (theta - 2.0) / 6.0,
        (theta + 1.0) * (theta - 1.0) * (theta - 2.0) / 2.0,
        -(theta + 1.0) * theta * (theta - 2.0) / 2.0,
        (theta + 1.0) * theta * (theta - 1.0) / 6.0,
    ])


def parse_family(family) -> int:
    if family in (FORWARD, "+", "forward", "plus", "1", "+1"):
        return FORWARD
    if family in (BACKWARD, "-", "backward", "minus", "-1"):
        return BACKWARD
    raise DomainError(f"unknown characteristic family {family!r}; use '+' or '-'")


class RiccatiCoefficients(NamedTuple):
    k1: object
    k2: object
    k1_eps: object
    k2_eps: object


def riccati_coefficients(eta, m_x, model: GasModel, epsilon: Optional[float] = None) -> RiccatiCoefficients:
    """k1, k2 and, when epsilon is given, k1_eps, k2_eps (NaN otherwise)."""
    gamma = model.gamma
    eta = np.asarray(eta, dtype=float)
    k1 = model.riccati_k1_factor * eta ** (2.0 / (gamma - 1.0))
    k2 = model.riccati_k2_factor * eta * m_x
    if epsilon is None:
        nan = np.full_like(eta, np.nan)
        return RiccatiCoefficients(k1, k2, nan, nan)
    epsilon = validate_epsilon(epsilon)
    k1_eps = model.riccati_k1_factor * eta ** (2.0 / (gamma - 1.0) * (1.0 - epsilon))
    k2_eps = model.riccati_k2_factor * eta ** (1.0 + 2.0 * epsilon / (gamma - 1.0)) * m_x
    return RiccatiCoefficients(k1, k2, k1_eps, k2_eps)


def riccati_rhs(family: int, k1, k2, a, partner):
    """Right-hand side for alpha (family +, partner beta) or beta (family -, partner alpha)."""
    if family == FORWARD:
        return k1 * (k2 * (3.0 * a + partner) + a * partner - a * a)
    return k1 * (-k2 * (partner + 3.0 * a) + a * partner - a * a)


def scaled_riccati_rhs(family: int, k1_eps, k2_eps, a, partner, epsilon: float, gamma: float):
    """Right-hand side for alpha_eps (family +) or beta_eps (family -)."""
    coupling = 1.0 - 4.0 * epsilon / (gamma + 1.0)
    if family == FORWARD:
        lower = k2_eps * (3.0 * a - 4.0 * epsilon * a + partner)
    else:
        lower = -k2_eps * (partner + 3.0 * a - 4.0 * epsilon * a)
    return k1_eps * (lower + coupling * a * partner - a * a)


class LocalState(NamedTuple):
    u: float
    eta: float
    ux: float
    eta_x: float
    m: float
    m_x: float
    c: float
    alpha: float
    beta: float


class SpaceTimeInterpolator:
    """
    Evaluates a stored solution at arbitrary (x, t): cubic Lagrange in x on the
    stored nodes, cubic Hermite in t between consecutive snapshots using the
    semi-discrete time derivatives.
    """

    def __init__(self, history: SolutionHistory):
        if not history.snapshots:
            raise HistoryBoundsError("empty history")
        self.history = history
        self.model = history.model
        self.grid = history.grid
        self.times = history.times
        boundary = history.boundary
        h = self.grid.h

        values, rates = [], []
        for snap in history.snapshots:
            u_t, eta_t = time_derivatives(snap, history.system)
            values.append([pad(snap.u, boundary), pad(snap.eta, boundary),
                           pad(snap.ux, boundary), pad(snap.eta_x, boundary)])
            d = snap.derivative
            rates.append([pad(u_t, boundary), pad(eta_t, boundary),
                          pad(d(u_t), boundary), pad(d(eta_t), boundary)])
        self._values = np.asarray(values)
        self._rates = np.asarray(rates)
        first = history.initial
        self._entropy = np.asarray([pad(first.m, boundary), pad(first.m_x, boundary)])
        self.c_max = max(float(np.max(snap.c)) for snap in history.snapshots)
        self._h = h

    @property
    def t_min(self) -> float:
        return float(self.times[0])

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def contains(self, x: float, t: float) -> bool:
        tol = TIME_TOLERANCE * max(1.0, abs(self.t_max))
        return (self.grid.x_min <= x <= self.grid.x_max) and (self.t_min - tol <= t <= self.t_max + tol)

    def _stencil(self, x: float):
        pos = (x - self.grid.x_min) / self._h - 0.5
        j = min(max(int(math.floor(pos)), -1), self.grid.n - 1)
        weights = _lagrange_weights(pos - j)
        start = j - 1 + 2  # ghost offset
        return slice(start, start + 4), weights

    def _hermite(self, t: float):
        if len(self.times) == 1:
            return 0, 0.0, None
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.times) - 2)
        dt = self.times[k + 1] - self.times[k]
        s = min(max((t - self.times[k]) / dt, 0.0), 1.0)
        s2, s3 = s * s, s * s * s
        basis = (2 * s3 - 3 * s2 + 1, (s3 - 2 * s2 + s) * dt, -2 * s3 + 3 * s2, (s3 - s2) * dt)
        return k, s, basis

    def raw(self, x: float, t: float) -> np.ndarray:
        """Interpolated (u, eta, u_x, eta_x, m, m_x) at one point."""
        if not self.contains(x, t):
            raise HistoryBoundsError(f"point (x={x:.6g}, t={t:.6g}) outside stored history "
                                     f"[{self.grid.x_min:.6g}, {self.grid.x_max:.6g}] x "
                                     f"[{self.t_min:.6g}, {self.t_max:.6g}]")
        sl, w = self._stencil(x)
        k, _, basis = self._hermite(t)
        if basis is None:
            dynamic = self._values[0, :, sl] @ w
        else:
            h00, h10, h01, h11 = basis
            dynamic = (h00 * (self._values[k, :, sl] @ w) + h10 * (self._rates[k, :, sl] @ w)
                       + h01 * (self._values[k + 1, :, sl] @ w) + h11 * (self._rates[k + 1, :, sl] @ w))
        static = self._entropy[:, sl] @ w
        return np.concatenate([dynamic, static])

    def local(self, x: float, t: float) -> LocalState:
        u, eta, ux, eta_x, m, m_x = self.raw(x, t)
        gamma = self.model.gamma
        with np.errstate(invalid="ignore"):
            c = self.model.K_c * m * eta ** ((gamma + 1.0) / (gamma - 1.0))
        alpha, beta = gradient_variables(ux, eta, eta_x, m, m_x, gamma)
        return LocalState(u, eta, ux, eta_x, m, m_x, c, alpha, beta)


def interpolator_for(history: SolutionHistory) -> SpaceTimeInterpolator:
    interp = history.cache.get("interpolator")
    if interp is None:
        interp = SpaceTimeInterpolator(history)
        history.cache["interpolator"] = interp
    return interp


@dataclass(frozen=True, eq=False)
class CharacteristicPath:
    """Samples of one traced characteristic, in increasing time order."""

    family: int
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    eta: np.ndarray
    m: np.ndarray
    m_x: np.ndarray
    c: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    coefficients: RiccatiCoefficients
    epsilon: Optional[float] = None
    stop: str = "time_box"
    quantity: Optional[str] = None
    carried: Optional[np.ndarray] = field(default=None, repr=False)
    field_value: Optional[np.ndarray] = field(default=None, repr=False)
    _gamma: float = field(default=1.4, repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def s(self) -> np.ndarray:
        return self.u + self.m * self.eta

    @property
    def r(self) -> np.ndarray:
        return self.u - self.m * self.eta

    @property
    def own(self) -> np.ndarray:
        """Field gradient carried by this family: alpha on + paths, beta on - paths."""
        return self.alpha if self.family == FORWARD else self.beta

    @property
    def partner(self) -> np.ndarray:
        return self.beta if self.family == FORWARD else self.alpha

    def scaled(self, which: str) -> np.ndarray:
        if self.epsilon is None:
            raise DomainError("path was sampled without an entropy weight epsilon")
        weight = eps_weight(self.eta, self.epsilon, self._gamma)
        return weight * (self.alpha if which == "alpha" else self.beta)


def _march(interp: SpaceTimeInterpolator, x0: float, times: np.ndarray, family: int,
           riccati: Optional[Callable] = None, a0: Optional[float] = None):
    """
    RK4 on dx/dt = family*c (and optionally da/dt = riccati(state, a)) over the
    given time samples. Returns (x, a, stop) truncated where the path left the box
    or the carried value stopped being resolved.
    """
    xs = [x0]
    values = [a0] if riccati is not None else None
    stop = "time_box"

    def f(t, x, a):
        state = interp.local(x, t)
        dx = family * state.c
        da = riccati(state, a) if riccati is not None else 0.0
        return dx, da

    x, a = x0, (a0 if riccati is not None else 0.0)
    for t, t_next in zip(times[:-1], times[1:]):
        dt = t_next - t
        try:
            k1x, k1a = f(t, x, a)
            k2x, k2a = f(t + 0.5 * dt, x + 0.5 * dt * k1x, a + 0.5 * dt * k1a)
            k3x, k3a = f(t + 0.5 * dt, x + 0.5 * dt * k2x, a + 0.5 * dt * k2a)
            k4x, k4a = f(t_next, x + dt * k3x, a + dt * k3a)
        except HistoryBoundsError:
            stop = "space_box"
            break
        x_new = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        if not interp.contains(x_new, t_next):
            stop = "space_box"
            break
        if riccati is not None:
            a_new = a + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            if not math.isfinite(a_new) or abs(k1a * dt) > STEP_RESOLUTION * max(abs(a), 1.0) \
                    or abs(a_new) > BLOWUP_MAGNITUDE:
                stop = "riccati_blowup"
                break
            a = a_new
            values.append(a)
        x = x_new
        xs.append(x)
    return np.asarray(xs), (np.asarray(values) if values is not None else None), stop


def _sample(interp: SpaceTimeInterpolator, family: int, t: np.ndarray, x: np.ndarray,
            epsilon: Optional[float], stop: str) -> CharacteristicPath:
    states = [interp.local(xi, ti) for xi, ti in zip(x, t)]
    cols = {name: np.array([getattr(s, name) for s in states]) for name in LocalState._fields}
    coefficients = riccati_coefficients(cols["eta"], cols["m_x"], interp.model, epsilon)
    return CharacteristicPath(
        family=family, t=np.asarray(t, dtype=float), x=np.asarray(x, dtype=float),
        u=cols["u"], eta=cols["eta"], m=cols["m"], m_x=cols["m_x"], c=cols["c"],
        alpha=cols["alpha"], beta=cols["beta"], coefficients=coefficients,
        epsilon=epsilon, stop=stop, _gamma=interp.model.gamma,
    )


def path_time_step(interp: SpaceTimeInterpolator, cfl: float = PATH_CFL) -> float:
    return cfl * interp.grid.h / interp.c_max


def trace(history: SolutionHistory, x0: float, t0: Optional[float] = None, family=FORWARD,
          direction: str = "forward", dt: Optional[float] = None,
          epsilon: Optional[float] = None) -> CharacteristicPath:
    """Trace a +/- characteristic from (x0, t0) to the edge of the stored space-time box."""
    family = parse_family(family)
    if direction not in ("forward", "backward"):
        raise DomainError(f"direction must be 'forward' or 'backward', got {direction!r}")
    interp = interpolator_for(history)
    t0 = interp.t_min if t0 is None else float(t0)
    if not interp.contains(x0, t0):
        raise HistoryBoundsError(f"start point (x={x0!r}, t={t0!r}) outside stored history")
    if epsilon is not None:
        epsilon = validate_epsilon(epsilon)

    step_size = dt or path_time_step(interp)
    t_stop = interp.t_max if direction == "forward" else interp.t_min
    span = abs(t_stop - t0)
    n_steps = max(int(math.ceil(span / step_size)), 1) if span > 0 else 0
    sign = 1.0 if direction == "forward" else -1.0
    times = t0 + sign * step_size * np.arange(n_steps + 1)
    if n_steps:
        times[-1] = t_stop

    xs, _, stop = _march(interp, float(x0), times, family)
    times = times[: len(xs)]
    if direction == "backward":
        times, xs = times[::-1].copy(), xs[::-1].copy()
    return _sample(interp, family, times, xs, epsilon, stop)


def trace_many(history: SolutionHistory, seeds: Sequence[float], family=FORWARD, t0: Optional[float] = None,
               epsilon: Optional[float] = None) -> List[CharacteristicPath]:
    """Independent forward-in-time paths from several seed positions."""
    return [trace(history, x0, t0=t0, family=family, epsilon=epsilon) for x0 in seeds]


def _integrate(path: CharacteristicPath, history: SolutionHistory, rhs: Callable, initial: float,
               quantity: str, field_values: Callable[[CharacteristicPath], np.ndarray]) -> CharacteristicPath:
    interp = interpolator_for(history)
    xs, carried, stop = _march(interp, float(path.x[0]), path.t, path.family, riccati=rhs, a0=initial)
    resampled = _sample(interp, path.family, path.t[: len(xs)], xs, path.epsilon,
                        stop if stop != "time_box" else path.stop)
    return replace(resampled, quantity=quantity, carried=carried, field_value=field_values(resampled))


def integrate_riccati_psystem(path: CharacteristicPath, history: SolutionHistory) -> CharacteristicPath:
    """Carry alpha (+ family) or beta (- family) along the path with the isentropic Riccati equation."""
    if history.system != PSYSTEM and not history.initial.is_isentropic:
        raise DomainError("p-system Riccati integration needs an isentropic history (m constant)")
    family = path.family

    def rhs(state: LocalState, a):
        k1 = history.model.riccati_k1_factor * state.eta ** (2.0 / (history.model.gamma - 1.0))
        partner = state.beta if family == FORWARD else state.alpha
        return riccati_rhs(family, k1, 0.0, a, partner)

    initial = float(path.own[0])
    quantity = "alpha" if family == FORWARD else "beta"
    return _integrate(path, history, rhs, initial, quantity, lambda p: p.own)


def integrate_riccati_full(path: CharacteristicPath, history: SolutionHistory,
                           epsilon: Optional[float] = None) -> CharacteristicPath:
    """Full-Euler Riccati transport of alpha/beta, or of alpha_eps/beta_eps when epsilon is given."""
    model = history.model
    family = path.family
    if epsilon is None:
        def rhs(state: LocalState, a):
            coeff = riccati_coefficients(state.eta, state.m_x, model)
            partner = state.beta if family == FORWARD else state.alpha
            return riccati_rhs(family, float(coeff.k1), float(coeff.k2), a, partner)

        quantity = "alpha" if family == FORWARD else "beta"
        return _integrate(path, history, rhs, float(path.own[0]), quantity, lambda p: p.own)

    epsilon = validate_epsilon(epsilon)
    if path.epsilon != epsilon:
        path = replace(path, epsilon=epsilon)

    def rhs_eps(state: LocalState, a):
        coeff = riccati_coefficients(state.eta, state.m_x, model, epsilon)
        weight = eps_weight(state.eta, epsilon, model.gamma)
        partner = weight * (state.beta if family == FORWARD else state.alpha)
        return scaled_riccati_rhs(family, float(coeff.k1_eps), float(coeff.k2_eps), a, float(partner),
                                  epsilon, model.gamma)

    which = "alpha" if family == FORWARD else "beta"
    initial = float(path.scaled(which)[0])
    return _integrate(path, history, rhs_eps, initial, f"{which}_eps", lambda p: p.scaled(which))


def eta_transport_residual(path: CharacteristicPath, history: SolutionHistory) -> float:
    """
    Max |d eta/dt along the path - predicted rate|, with
    +: -K_c eta^((g+1)/(g-1)) beta - ((g-1)/g) K_c eta^(2g/(g-1)) m_x
    -: -K_c eta^((g+1)/(g-1)) alpha + ((g-1)/g) K_c eta^(2g/(g-1)) m_x
    """
    if len(path) < 2:
        return 0.0
    model = history.model
    gamma = model.gamma
    edge_order = 2 if len(path) >= 3 else 1
    observed = np.gradient(path.eta, path.t, edge_order=edge_order)
    wave = -model.K_c * path.eta ** ((gamma + 1.0) / (gamma - 1.0)) * path.partner
    entropy = model.entropy_gradient_factor * model.K_c * path.eta ** (2.0 * gamma / (gamma - 1.0)) * path.m_x
    predicted = wave - entropy if path.family == FORWARD else wave + entropy
    return float(np.max(np.abs(observed - predicted)))


def logistic_reference(k: float, M: float, a0: float, t):
    """Exact solution of da/dt = k (M a - a^2), a(0) = a0, for 0 < a0 < M."""
    if not (k > 0.0):
        raise DomainError(f"k must be > 0, got {k!r}")
    if not (0.0 < a0 < M):
        raise DomainError(f"a0 must lie in (0, M), got a0={a0!r}, M={M!r}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("t must be >= 0")
    return M / (1.0 + np.exp(-k * M * t) * (M / a0 - 1.0))


def integrate_frozen_riccati(k1: float, partner: float, a0: float, t_end: float, dt: float = 1e-3):
    """
    RK4 for da/dt = k1 (a partner - a^2) with frozen coefficients.
    Returns (t, a, blew_up); integration stops early once the value is no longer resolved.
    """
    def rhs(a):
        return riccati_rhs(FORWARD, k1, 0.0, a, partner)

    n_steps = int(math.ceil(t_end / dt - 1e-9))
    times, values = [0.0], [float(a0)]
    a = float(a0)
    for i in range(n_steps):
        t, t_next = i * dt, min((i + 1) * dt, t_end)
        h = t_next - t
        k1a = rhs(a)
        k2a = rhs(a + 0.5 * h * k1a)
        k3a = rhs(a + 0.5 * h * k2a)
        k4a = rhs(a + h * k3a)
        a_new = a + h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        if not math.isfinite(a_new) or abs(k1a * h) > STEP_RESOLUTION * max(abs(a), 1.0) \
                or abs(a_new) > BLOWUP_MAGNITUDE:
            return np.asarray(times), np.asarray(values), True
        a = a_new
        times.append(t_next)
        values.append(a)
    return np.asarray(times), np.asarray(values), False


def extrapolate_blowup(t: float, value: float, k1: float) -> Optional[float]:
    """t* from the pure-quadratic asymptote da/dt = -k1 a^2, i.e. a = -1/(k1 (t* - t))."""
    if value >= 0.0 or not k1 > 0.0:
        return None
    return t - 1.0 / (k1 * value)


class BlowupEstimate(NamedTuple):
    t_star: float
    x_star: float
    family: int


def compressive_seeds(history: SolutionHistory, count: int = 9) -> dict:
    """Seed positions spread over the most compressive region of each family at t0."""
    first = history.initial
    seeds = {}
    for family, values in ((FORWARD, first.alpha), (BACKWARD, first.beta)):
        lowest = float(np.min(values))
        if lowest >= -SEED_TOLERANCE * float(np.max(np.abs(values))):
            seeds[family] = []
            continue
        region = first.x[values <= 0.5 * lowest]
        seeds[family] = list(np.linspace(region.min(), region.max(), count)) if region.size > 1 else [float(region[0])]
    return seeds


def estimate_blowup_time(history: SolutionHistory, seeds=None, epsilon: Optional[float] = None
                         ) -> Optional[BlowupEstimate]:
    """
    Integrate the Riccati equation along candidate characteristics and extrapolate
    the gradient blowup time from the last resolved negative value. Returns the
    earliest estimate not beyond the configured horizon, or None.
    """
    if seeds is None:
        seeds = compressive_seeds(history)
    elif not isinstance(seeds, dict):
        seeds = {FORWARD: list(seeds), BACKWARD: list(seeds)}

    horizon = history.t_end
    best: Optional[BlowupEstimate] = None
    for family, positions in seeds.items():
        for x0 in positions:
            path = trace(history, x0, family=family)
            if history.system == PSYSTEM:
                carried = integrate_riccati_psystem(path, history)
            else:
                carried = integrate_riccati_full(path, history)
            values = carried.carried
            if values is None or values.size == 0 or values[-1] >= 0.0:
                continue
            last = len(values) - 1
            k1 = float(carried.coefficients.k1[last])
            t_star = extrapolate_blowup(float(carried.t[last]), float(values[last]), k1)
            if t_star is None or t_star > horizon:
                continue
            logger.debug("family %+d seed %.4g: t*=%.6g (%s)", family, x0, t_star, carried.stop)
            if best is None or t_star < best.t_star:
                best = BlowupEstimate(t_star, float(carried.x[last]), family)
    if best is not None:
        logger.info("gradient blowup estimated at t*=%.6g, x=%.6g, family %+d", *best)
    return best


def lemma_cases(path: CharacteristicPath, N: float, K1_hat: float, gamma: float) -> dict:
    """
    Classify samples of a forward epsilon-weighted path with alpha_eps > N/2 by
    the sign regime of beta_eps and check the comparison used for each regime.
    """
    if path.family != FORWARD or path.epsilon is None:
        raise DomainError("lemma_cases needs a forward path sampled with epsilon")
    eps = path.epsilon
    a = path.scaled("alpha")
    b = path.scaled("beta")
    coeff = path.coefficients
    rhs = scaled_riccati_rhs(FORWARD, coeff.k1_eps, coeff.k2_eps, a, b, eps, gamma)
    k_tilde = K1_hat * (1.0 - 4.0 * eps / (gamma + 1.0))
    near = a > 0.5 * N
    case_one = near & (b > -0.5 * N)
    case_two = near & (b <= -0.5 * N)
    ok_one = rhs[case_one] <= k_tilde * (N * a[case_one] - a[case_one] ** 2)
    ok_two = rhs[case_two & (b < -0.25 * N)] < 0.0
    return {
        "case_I": int(case_one.sum()), "case_I_ok": int(ok_one.sum()),
        "case_II": int(case_two.sum()), "case_II_ok": int(ok_two.sum()),
    }
