"""
Executable monitors for the bounds that hold for classical solutions:

* invariant domain      max{alpha, beta} < M           (p-system)
                        max{alpha_eps, beta_eps} < N   (full Euler)
* density floors        min rho >= 1/(tau_max(0) + M t)
                        min rho >= (N1/(N2 + t))^(1 + delta)
* uniform upper bounds  |u| and eta bounded by L1, L2 (finite entropy variation)
* weighted slopes       rho^eps u_x < N0, and the Eulerian slope u_y = rho u_x

Every constant is computed from the initial snapshot. Numerical solutions only
satisfy the bounds up to a discretization envelope, the slack, applied as
bound + slack * max(1, |bound|).
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .errors import DomainError
from .fields import FieldSnapshot, eps_weight, validate_epsilon
from .solver import FULL, PSYSTEM, SolutionHistory
from .thermo import GasModel

logger = logging.getLogger(__name__)

BOUND_MARGIN = 1e-9
DEFAULT_SLACK = 1e-6
SLACK_FACTOR = 3.0
DEFAULT_DECAY_WINDOW = (5.0, 50.0)

# order of the characters in verdict_bits; "-" marks a check that does not apply
CHECK_NAMES = ("gradient", "scaled_gradient", "monotone", "restart", "floor",
               "weighted_slope", "eta_bound", "u_bound", "rho_bound", "eulerian_slope")

SYSTEM_ALIASES = {"psystem": PSYSTEM, "p-system": PSYSTEM, "p_system": PSYSTEM, "full": FULL}


def _system(system: str) -> str:
    try:
        return SYSTEM_ALIASES[system]
    except KeyError:
        raise DomainError(f"system must be 'p-system' or 'full', got {system!r}") from None


@dataclass(frozen=True)
class TheoremConstants:
    """Constants of the bounds, all derived from one initial snapshot."""

    gamma: float
    system: str
    M: float
    epsilon: Optional[float]
    delta: Optional[float]
    N: Optional[float]
    N_threshold: Optional[float]
    K1: float
    K1_hat: Optional[float]
    K2_hat: Optional[float]
    M_L: float
    M_U: float
    M_s: float
    M_r: float
    V: float
    V_bar: float
    L1: float
    L2: float
    eta_bound: float
    u_bound: float
    rho_bound: float
    tau_max0: float
    M1: float
    M2: float
    N1: Optional[float]
    N2: Optional[float]
    # rho^eps = rho_eps_conversion * eta^(2 eps/(gamma-1))
    rho_eps_conversion: Optional[float]
    N0: Optional[float]
    M_bar: float
    N0_bar: Optional[float]

    def as_record(self) -> dict:
        return asdict(self)


def lemma_threshold(gamma: float, epsilon: float, K2_hat: float) -> float:
    """max{4(gamma+1) K2_hat/eps, 2 K2_hat/(1 - 4 eps/(gamma+1))}."""
    epsilon = validate_epsilon(epsilon)
    if not K2_hat >= 0.0:
        raise DomainError(f"K2_hat must be >= 0, got {K2_hat!r}")
    return max(4.0 * (gamma + 1.0) * K2_hat / epsilon,
               2.0 * K2_hat / (1.0 - 4.0 * epsilon / (gamma + 1.0)))


def entropy_variation(snapshot: FieldSnapshot) -> float:
    """V = integral of |m'|/m, trapezoidal on the grid nodes."""
    return float(trapezoid(np.abs(snapshot.m_x) / snapshot.m, snapshot.x))


def uniform_bounds(M_s: float, M_r: float, V: float, M_L: float, M_U: float, gamma: float):
    """(L1, L2, eta bound, |u| bound) for finite entropy variation."""
    V_bar = V / (2.0 * gamma)
    growth = math.exp(V_bar**2)
    L1 = M_s + V_bar * M_r + V_bar * (V_bar * M_s + V_bar**2 * M_r) * growth
    L2 = M_r + V_bar * M_s + V_bar * (V_bar * M_r + V_bar**2 * M_s) * growth
    half = 0.5 * (L1 + L2)
    eta_bound = half * M_L ** (1.0 / (2.0 * gamma) - 1.0)
    u_bound = half * M_U ** (1.0 / (2.0 * gamma))
    return L1, L2, eta_bound, u_bound


def theorem_constants(snapshot: FieldSnapshot, model: Optional[GasModel] = None,
                      epsilon: Optional[float] = None) -> TheoremConstants:
    model = model or snapshot.model
    gamma = model.gamma
    if not np.all(np.isfinite(snapshot.rho)) or np.any(snapshot.rho <= 0.0):
        raise DomainError("initial density must be positive and finite")
    V = entropy_variation(snapshot)
    if not math.isfinite(V):
        raise DomainError("entropy variation V is not finite")
    system = PSYSTEM if snapshot.is_isentropic else FULL

    alpha, beta = snapshot.alpha, snapshot.beta
    M = max(float(np.max(alpha)), float(np.max(beta)), 0.0) + BOUND_MARGIN

    M_L, M_U = float(np.min(snapshot.m)), float(np.max(snapshot.m))
    M_s = float(np.max(np.abs(snapshot.s))) + BOUND_MARGIN
    M_r = float(np.max(np.abs(snapshot.r))) + BOUND_MARGIN
    L1, L2, eta_bound, u_bound = uniform_bounds(M_s, M_r, V, M_L, M_U, gamma)
    rho_bound = eta_bound ** (2.0 / (gamma - 1.0)) / model.K_tau
    K1 = model.riccati_k1_factor * eta_bound ** (2.0 / (gamma - 1.0))
    tau_max0 = float(np.max(snapshot.tau))

    values = dict(
        gamma=gamma, system=system, M=M, epsilon=None, delta=None, N=None, N_threshold=None,
        K1=K1, K1_hat=None, K2_hat=None, M_L=M_L, M_U=M_U, M_s=M_s, M_r=M_r, V=V, V_bar=V / (2.0 * gamma),
        L1=L1, L2=L2, eta_bound=eta_bound, u_bound=u_bound, rho_bound=rho_bound, tau_max0=tau_max0,
        M1=1.0 / M, M2=tau_max0 / M, N1=None, N2=None, rho_eps_conversion=None, N0=None,
        M_bar=M * rho_bound, N0_bar=None,
    )
    if epsilon is not None:
        epsilon = validate_epsilon(epsilon)
        K1_hat = model.riccati_k1_factor * eta_bound ** (2.0 / (gamma - 1.0) * (1.0 - epsilon))
        K2_hat = (model.riccati_k2_factor * eta_bound ** (1.0 + 2.0 * epsilon / (gamma - 1.0))
                  * float(np.max(np.abs(snapshot.m_x))))
        threshold = lemma_threshold(gamma, epsilon, K2_hat)
        alpha_eps, beta_eps = snapshot.scaled(epsilon)
        N = max(threshold, float(np.max(alpha_eps)), float(np.max(beta_eps))) + BOUND_MARGIN
        conversion = model.K_tau ** (-epsilon)
        N0 = N * conversion
        rate = (1.0 - epsilon) * N0
        values.update(
            epsilon=epsilon, delta=epsilon / (1.0 - epsilon), N=N, N_threshold=threshold,
            K1_hat=K1_hat, K2_hat=K2_hat, rho_eps_conversion=conversion, N0=N0,
            N1=1.0 / rate, N2=tau_max0 ** (1.0 - epsilon) / rate,
            N0_bar=N0 * rho_bound ** (1.0 - epsilon),
        )
    constants = TheoremConstants(**values)
    logger.debug("theorem constants: %s", constants)
    return constants


def psystem_floor(tau_max0: float, M: float, t):
    """1/(tau_max(0) + M t), from tau_t = u_x < M."""
    return 1.0 / (tau_max0 + M * np.asarray(t, dtype=float))


def full_floor(tau_max0: float, N0: float, epsilon: float, t):
    """(tau_max(0)^(1-eps) + (1-eps) N0 t)^(-1/(1-eps)), from rho^eps tau_t < N0."""
    power = 1.0 - epsilon
    return (tau_max0**power + power * N0 * np.asarray(t, dtype=float)) ** (-1.0 / power)


def compute_density_floor(constants: TheoremConstants, t, system: Optional[str] = None):
    system = _system(system or constants.system)
    if system == PSYSTEM:
        return psystem_floor(constants.tau_max0, constants.M, t)
    if constants.epsilon is None:
        raise DomainError("the full Euler floor needs constants computed with epsilon")
    return full_floor(constants.tau_max0, constants.N0, constants.epsilon, t)


def eulerian_slope(rho, ux):
    """u_y = rho u_x, the velocity slope in Eulerian coordinates."""
    return np.asarray(rho) * np.asarray(ux)


def _within(value, bound, slack: float) -> bool:
    return bool(value <= bound + slack * max(1.0, abs(bound)))


def check_invariant_domain(history: SolutionHistory, constants: TheoremConstants,
                           slack: float = DEFAULT_SLACK) -> pd.DataFrame:
    """
    Per stored time: max{alpha, beta} against M and its monotonicity against every
    earlier time, plus the floor re-derived from every earlier restart time (p-system
    only), and max{alpha_eps, beta_eps} against N whenever epsilon is set.
    """
    eps = constants.epsilon
    rows = []
    running_min = math.inf
    restarts = []  # (t_j, tau_max_j, M_j)
    for snap in history:
        max_alpha, max_beta = float(np.max(snap.alpha)), float(np.max(snap.beta))
        max_ab = max(max_alpha, max_beta)
        row = {"t": snap.t, "max_alpha": max_alpha, "max_beta": max_beta,
               "gradient_ok": _within(max_ab, constants.M, slack) if history.system == PSYSTEM else None}
        if eps is not None:
            alpha_eps, beta_eps = snap.scaled(eps)
            row["max_alpha_eps"] = float(np.max(alpha_eps))
            row["max_beta_eps"] = float(np.max(beta_eps))
            row["scaled_gradient_ok"] = _within(max(row["max_alpha_eps"], row["max_beta_eps"]), constants.N, slack)
        else:
            row["max_alpha_eps"] = row["max_beta_eps"] = math.nan
            row["scaled_gradient_ok"] = None

        if history.system == PSYSTEM:
            row["monotone_ok"] = running_min == math.inf or _within(max_ab, running_min, slack)
            running_min = min(running_min, max_ab)
            min_rho = float(np.min(snap.rho))
            restart_ok = True
            for t_j, tau_j, M_j in restarts:
                if min_rho < psystem_floor(tau_j, M_j, snap.t - t_j) - slack:
                    restart_ok = False
                    break
            row["restart_ok"] = restart_ok
            restarts.append((snap.t, float(np.max(snap.tau)), max(max_ab, 0.0) + BOUND_MARGIN))
        else:
            row["monotone_ok"] = row["restart_ok"] = None
        rows.append(row)
    return pd.DataFrame(rows)


@dataclass
class MonitorReport:
    """Per-time monitor table plus its summary."""

    frame: pd.DataFrame
    constants: TheoremConstants
    slack: float
    scenario: str = ""
    exponent: Optional[float] = None
    fit_residual: Optional[float] = None
    first_violation: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.first_violation is None

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "gamma": self.constants.gamma,
            "epsilon": self.constants.epsilon,
            "exponent": self.exponent,
            "all_pass": self.all_pass,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary())

    def to_text(self) -> str:
        c = self.constants
        lines = [
            f"scenario: {self.scenario or '-'}",
            f"system: {c.system}  gamma={c.gamma:g}  epsilon={c.epsilon if c.epsilon is not None else '-'}",
            f"stored times: {len(self.frame)}  slack: {self.slack:.3g}",
            f"M={c.M:.10g}  floor=1/({c.tau_max0:.10g} + M t)",
        ]
        if c.epsilon is not None:
            lines.append(f"N={c.N:.10g} (threshold {c.N_threshold:.6g})  N0={c.N0:.10g} "
                         f"(N x K_tau^-eps, K_tau^-eps={c.rho_eps_conversion:.10g})  delta={c.delta:.6g}")
            lines.append(f"floor=(N1/(N2 + t))^(1+delta) with N1={c.N1:.10g}, N2={c.N2:.10g}")
        lines.append(f"eta <= {c.eta_bound:.10g}  |u| <= {c.u_bound:.10g}  rho <= {c.rho_bound:.10g}  "
                     f"(V={c.V:.6g}, L1={c.L1:.6g}, L2={c.L2:.6g})")
        if self.exponent is not None:
            lines.append(f"decay exponent of min rho: {self.exponent:.6f} (max residual {self.fit_residual:.3g})")
        for name in CHECK_NAMES:
            column = self.frame[f"{name}_ok"]
            applicable = column.dropna()
            if applicable.empty:
                lines.append(f"  {name:<16} n/a")
            else:
                failed = int((~applicable.astype(bool)).sum())
                lines.append(f"  {name:<16} {'PASS' if failed == 0 else f'FAIL ({failed} times)'}")
        if self.first_violation:
            lines.append(f"first violation: {self.first_violation['check']} at t={self.first_violation['t']:.10g}")
        lines.append("ALL PASS" if self.all_pass else "VIOLATIONS FOUND")
        return "\n".join(lines) + "\n"

    def table(self) -> pd.DataFrame:
        """CSV view: numeric columns followed by verdict_bits."""
        numeric = [c for c in self.frame.columns if not c.endswith("_ok")]
        out = self.frame[numeric].copy()
        out["verdict_bits"] = self.frame.apply(_verdict_bits, axis=1)
        return out


def _applies(value) -> bool:
    return value is not None and not (isinstance(value, float) and math.isnan(value))


def _verdict_bits(row) -> str:
    bits = []
    for name in CHECK_NAMES:
        value = row[f"{name}_ok"]
        bits.append(str(int(bool(value))) if _applies(value) else "-")
    return "".join(bits)


def check_bounds(history: SolutionHistory, constants: TheoremConstants, epsilon: Optional[float] = None,
                 slack: float = DEFAULT_SLACK, window: Sequence[float] = DEFAULT_DECAY_WINDOW,
                 scenario: str = "") -> MonitorReport:
    """Evaluate every bound at every stored time and aggregate the verdicts."""
    if epsilon is not None and constants.epsilon != validate_epsilon(epsilon):
        raise DomainError(f"constants were computed for epsilon={constants.epsilon!r}, not {epsilon!r}")
    if history.system == FULL and constants.epsilon is None:
        raise DomainError("full Euler monitors need an entropy weight epsilon")
    eps = constants.epsilon
    full = history.system == FULL

    frame = check_invariant_domain(history, constants, slack)
    floors = compute_density_floor(constants, frame["t"].to_numpy(), history.system)
    columns = {name: [] for name in ("min_rho", "max_rho", "max_ux", "max_rho_eps_ux", "max_eta_eps_ux",
                                     "max_eta", "max_abs_u", "max_uy", "uy_bound")}
    verdicts = {name: [] for name in ("floor_ok", "weighted_slope_ok", "eta_bound_ok", "u_bound_ok",
                                      "rho_bound_ok", "eulerian_slope_ok")}
    for snap, floor in zip(history, floors):
        rho = snap.rho
        ux = snap.ux
        uy = eulerian_slope(rho, ux)
        min_rho, max_rho = float(np.min(rho)), float(np.max(rho))
        max_eta, max_abs_u = float(np.max(snap.eta)), float(np.max(np.abs(snap.u)))
        columns["min_rho"].append(min_rho)
        columns["max_rho"].append(max_rho)
        columns["max_ux"].append(float(np.max(ux)))
        columns["max_eta"].append(max_eta)
        columns["max_abs_u"].append(max_abs_u)
        columns["max_uy"].append(float(np.max(uy)))

        verdicts["floor_ok"].append(bool(min_rho >= floor - slack * max(1.0, float(floor))))
        verdicts["eta_bound_ok"].append(_within(max_eta, constants.eta_bound, slack))
        verdicts["u_bound_ok"].append(_within(max_abs_u, constants.u_bound, slack))
        verdicts["rho_bound_ok"].append(_within(max_rho, constants.rho_bound, slack))
        if eps is not None:
            rho_eps_ux = float(np.max(rho**eps * ux))
            eta_eps_ux = float(np.max(eps_weight(snap.eta, eps, constants.gamma) * ux))
            columns["max_rho_eps_ux"].append(rho_eps_ux)
            columns["max_eta_eps_ux"].append(eta_eps_ux)
            verdicts["weighted_slope_ok"].append(_within(rho_eps_ux, constants.N0, slack))
        else:
            columns["max_rho_eps_ux"].append(math.nan)
            columns["max_eta_eps_ux"].append(math.nan)
            verdicts["weighted_slope_ok"].append(None)
        uy_bound = constants.N0 * max_rho ** (1.0 - eps) if full else constants.M * max_rho
        columns["uy_bound"].append(uy_bound)
        verdicts["eulerian_slope_ok"].append(_within(columns["max_uy"][-1], uy_bound, slack))

    frame.insert(1, "min_rho", columns.pop("min_rho"))
    frame.insert(2, "floor", floors)
    for name, values in columns.items():
        frame[name] = values
    frame["eta_bound"] = constants.eta_bound
    frame["u_bound"] = constants.u_bound
    frame["rho_bound"] = constants.rho_bound
    for name, values in verdicts.items():
        frame[name] = pd.Series(values, dtype=object)
    for name in CHECK_NAMES:
        frame[f"{name}_ok"] = frame[f"{name}_ok"].astype(object)

    report = MonitorReport(frame=frame, constants=constants, slack=slack, scenario=scenario)
    report.first_violation = _first_violation(frame)
    if report.first_violation is not None:
        logger.warning("%s violated at t=%.6g", report.first_violation["check"], report.first_violation["t"])

    t_a, t_b = window
    times = frame["t"].to_numpy()
    if len(times) and times[0] <= t_a and times[-1] >= t_b:
        try:
            report.exponent, report.fit_residual = fit_decay_exponent(times, frame["min_rho"].to_numpy(), window)
        except DomainError as exc:
            logger.info("decay exponent not fitted: %s", exc)
    return report


def _first_violation(frame: pd.DataFrame) -> Optional[dict]:
    for index, row in frame.iterrows():
        for name in CHECK_NAMES:
            value = row[f"{name}_ok"]
            if _applies(value) and not bool(value):
                return {"t": float(row["t"]), "index": int(index), "check": name}
    return None


def fit_decay_exponent(t, min_rho, window: Sequence[float] = DEFAULT_DECAY_WINDOW):
    """
    Least-squares slope of log(min rho) against log(1 + t) over the window.
    Returns (exponent, max absolute residual of the log fit).
    """
    t_a, t_b = float(window[0]), float(window[1])
    if not (t_a >= 1.0 and t_b >= 10.0 * t_a):
        raise DomainError(f"window must satisfy t_a >= 1 and t_b >= 10 t_a, got [{t_a:g}, {t_b:g}]")
    t = np.asarray(t, dtype=float)
    min_rho = np.asarray(min_rho, dtype=float)
    if t.size == 0 or t_a < t[0] or t_b > t[-1]:
        raise DomainError(f"window [{t_a:g}, {t_b:g}] lies outside the series")
    mask = (t >= t_a) & (t <= t_b)
    if mask.sum() < 2:
        raise DomainError("fewer than two samples inside the window")
    if np.any(min_rho[mask] <= 0.0):
        raise DomainError("min rho series must be positive")
    x, y = np.log1p(t[mask]), np.log(min_rho[mask])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), residual


def bound_overshoot(history: SolutionHistory, constants: TheoremConstants) -> float:
    """Largest amount by which any bound is exceeded (<= 0 when every bound holds strictly)."""
    report = check_bounds(history, constants, slack=0.0, window=(math.inf, math.inf))
    frame = report.frame
    overshoots = [
        float(np.max(frame["floor"] - frame["min_rho"])),
        float(frame["max_eta"].max()) - constants.eta_bound,
        float(frame["max_abs_u"].max()) - constants.u_bound,
    ]
    if history.system == PSYSTEM:
        overshoots.append(float(np.max(np.maximum(frame["max_alpha"], frame["max_beta"]))) - constants.M)
    if constants.epsilon is not None:
        overshoots.append(float(np.max(np.maximum(frame["max_alpha_eps"], frame["max_beta_eps"]))) - constants.N)
        overshoots.append(float(frame["max_rho_eps_ux"].max()) - constants.N0)
    return max(overshoots)


def measure_slack(overshoots: Sequence[float]) -> float:
    """Slack from a refinement study: 3 x the largest overshoot seen on any level."""
    overshoots = list(overshoots)
    if not overshoots:
        raise DomainError("need at least one refinement level")
    return max(SLACK_FACTOR * max(max(overshoots), 0.0), DEFAULT_SLACK)
