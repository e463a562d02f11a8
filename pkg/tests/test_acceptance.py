# Desk-scale runs of the full checks; deselected by default, run with `pytest -m slow`
import math

import numpy as np
import pytest

from shared.characteristics import estimate_blowup_time, trace
from shared.fields import Grid1D
from shared.monitors import bound_overshoot, check_bounds, fit_decay_exponent, measure_slack, theorem_constants
from shared.scenarios import ScenarioSpec
from shared.solver import SolverConfig, StopReason, build_grid, run, self_convergence

pytestmark = pytest.mark.slow

N = 4096
SLACK = 1e-4


def run_scenario(name, n=N, t_end=2.0, stride=20, **overrides):
    spec = ScenarioSpec.from_catalog(name, **overrides)
    model = spec.model()
    config = SolverConfig(t_end=t_end, stride=stride)
    return spec, run(spec, build_grid(spec, model, n, t_end), model, config)


def test_solver_self_convergence():
    spec = ScenarioSpec.from_catalog("smooth_periodicish_bump")
    result = self_convergence(spec, spec.model(), SolverConfig(t_end=1.0), ns=(512, 1024, 2048),
                              domain=(-12.0, 12.0))
    assert min(result["orders"]["u"] + result["orders"]["eta"]) >= 3.5


def test_riemann_invariant_drift_converges():
    drifts = []
    for n in (200, 400, 800):
        spec = ScenarioSpec.from_catalog("double_rarefaction", amplitude=0.5)
        history = run(spec, Grid1D(-20.0, 20.0, n), spec.model(), SolverConfig(t_end=2.0, stride=5))
        path = trace(history, 0.0)
        drifts.append(float(np.max(np.abs(path.s - path.s[0]))))
    orders = [math.log2(a / b) for a, b in zip(drifts, drifts[1:])]
    assert min(orders) >= 1.8


@pytest.mark.parametrize("gamma", [5.0 / 3.0, 2.0, 3.0, 7.0])
@pytest.mark.parametrize("name, t_end", [("double_rarefaction", 2.0), ("smooth_periodicish_bump", 2.0),
                                         ("compressive_pulse", 0.5)])
def test_invariant_domain(name, t_end, gamma):
    _, history = run_scenario(name, t_end=t_end, gamma=gamma)
    assert history.stop_reason is StopReason.HORIZON
    report = check_bounds(history, theorem_constants(history.initial), slack=SLACK)
    assert report.frame["gradient_ok"].all()
    assert report.frame["monotone_ok"].all()


@pytest.mark.parametrize("gamma", [5.0 / 3.0, 3.0])
def test_invariant_domain_long_time(gamma):
    # width 2 keeps the n/4 level resolved on the long-time domain
    spec = ScenarioSpec.from_catalog("double_rarefaction", gamma=gamma, amplitude=0.5, width=2.0)
    model = spec.model()
    config = SolverConfig(t_end=50.0, stride=20)
    grid = build_grid(spec, model, N, 50.0)
    histories = [run(spec, Grid1D(grid.x_min, grid.x_max, n), model, config) for n in (N // 4, N // 2, N)]
    assert all(h.stop_reason is StopReason.HORIZON for h in histories)
    slack = measure_slack([bound_overshoot(h, theorem_constants(h.initial)) for h in histories])
    assert slack < 1e-2
    report = check_bounds(histories[-1], theorem_constants(histories[-1].initial), slack=slack)
    assert report.frame["gradient_ok"].all()
    assert report.frame["monotone_ok"].all()


@pytest.mark.parametrize("gamma", [3.0, 5.0 / 3.0])
def test_density_decay_is_sharp(gamma):
    model = ScenarioSpec.from_catalog("double_rarefaction", gamma=gamma).model()
    # amplitude above the background eta: the centre tends to vacuum as t grows
    eta0 = ScenarioSpec.from_catalog("double_rarefaction", gamma=gamma).background_eta(model)
    _, history = run_scenario("double_rarefaction", t_end=50.0, stride=10, gamma=gamma, amplitude=1.2 * eta0)
    assert history.stop_reason is StopReason.HORIZON
    constants = theorem_constants(history.initial)
    report = check_bounds(history, constants, slack=SLACK)
    assert report.frame["floor_ok"].all()
    exponent, _ = fit_decay_exponent(history.times, report.frame["min_rho"].to_numpy(), (5.0, 50.0))
    assert -1.05 <= exponent <= -0.95
    assert report.exponent == pytest.approx(exponent)


@pytest.mark.parametrize("epsilon", [0.1, 0.2])
def test_full_euler_bounds(epsilon):
    _, history = run_scenario("entropy_bump", t_end=10.0, epsilon=epsilon)
    assert history.stop_reason is StopReason.HORIZON
    constants = theorem_constants(history.initial, epsilon=epsilon)
    report = check_bounds(history, constants, epsilon=epsilon, slack=SLACK)
    for check in ("scaled_gradient", "weighted_slope", "floor", "eta_bound", "u_bound", "rho_bound"):
        assert report.frame[f"{check}_ok"].all(), check


def test_blowup_time_cross_validation():
    _, history = run_scenario("compressive_pulse", t_end=4.0, stride=5, amplitude=0.5, gamma=3.0)
    assert history.stop_reason is StopReason.BLOWUP
    estimate = estimate_blowup_time(history)
    assert estimate is not None
    assert estimate.t_star == pytest.approx(history.t_stop, rel=0.05)
