import math

import numpy as np
import pytest

from conftest import simulate
from shared.errors import CFLViolation, ConfigError, DomainError
from shared.fields import FieldSnapshot, Grid1D
from shared.scenarios import ScenarioSpec
from shared.solver import (FULL, PSYSTEM, SolverConfig, StopReason, _blowup_check, build_grid, conservation_drift,
                           init_scenario, restrict_to_coarse, riemann_variation, run, self_convergence, stable_dt,
                           step, time_derivatives)


def pulse_snapshot(model, n=128):
    grid = Grid1D(-10.0, 10.0, n)
    x = grid.x
    return FieldSnapshot(t=0.0, u=0.2 * np.exp(-x**2), eta=np.full(n, math.sqrt(3.0)) + 0.1 * np.tanh(x),
                         m=np.ones(n), grid=grid, model=model)


class TestStep:

    def test_uniform_state_stays_uniform(self, uniform_history):
        first = uniform_history.initial
        for snap in uniform_history:
            assert np.array_equal(snap.u, first.u)
            assert np.array_equal(snap.eta, first.eta)
        assert uniform_history.system == PSYSTEM
        assert uniform_history.stop_reason is StopReason.HORIZON
        assert uniform_history.final.t == 2.0

    def test_full_step_matches_psystem_when_isentropic(self, gas3):
        snap = pulse_snapshot(gas3)
        dt = 0.5 * stable_dt(snap)
        full = step(snap, dt, system=FULL)
        psys = step(snap, dt, system=PSYSTEM)
        np.testing.assert_allclose(full.u, psys.u, rtol=0.0, atol=1e-14)
        np.testing.assert_allclose(full.eta, psys.eta, rtol=0.0, atol=1e-14)

    def test_entropy_is_carried_unchanged(self, gas3):
        snap = pulse_snapshot(gas3)
        snap = snap.replace(m=1.0 + 0.1 * np.exp(-snap.x**2))
        after = step(snap, stable_dt(snap))
        assert np.array_equal(after.m, snap.m)
        assert after.t == pytest.approx(stable_dt(snap))

    def test_cfl_violation(self, gas3):
        snap = pulse_snapshot(gas3)
        with pytest.raises(CFLViolation) as info:
            step(snap, 2.0 * stable_dt(snap))
        assert info.value.dt_max == pytest.approx(stable_dt(snap))

    def test_time_derivatives_vanish_on_constant_state(self, gas3):
        grid = Grid1D(-1.0, 1.0, 32)
        snap = FieldSnapshot(t=0.0, u=np.full(32, 0.3), eta=np.full(32, 2.0), m=np.full(32, 1.2),
                             grid=grid, model=gas3)
        u_t, eta_t = time_derivatives(snap)
        assert np.all(u_t == 0.0) and np.all(eta_t == 0.0)


class TestRun:

    def test_compressive_pulse_stops_on_blowup(self, compressive_history):
        assert compressive_history.stop_reason is StopReason.BLOWUP
        # the pulse steepens into a shock; the stop comes while the front still spans a few cells
        assert 0.5 < compressive_history.t_stop < 3.0
        assert compressive_history.stop_detail

    def test_density_floor_stop(self):
        spec = ScenarioSpec.from_catalog("double_rarefaction", amplitude=0.5)
        config = SolverConfig(t_end=5.0, rho_floor_factor=0.9)
        history = run(spec, Grid1D(-25.0, 25.0, 400), spec.model(), config)
        assert history.stop_reason is StopReason.DENSITY_FLOOR
        assert float(np.min(history.final.rho)) < 0.9
        assert history.t_stop == history.final.t < 5.0

    def test_stored_times_increase(self, rarefaction_history):
        assert np.all(np.diff(rarefaction_history.times) > 0.0)
        assert rarefaction_history.times[0] == 0.0

    def test_max_steps(self):
        spec = ScenarioSpec.from_catalog("double_rarefaction", amplitude=0.5)
        history = run(spec, Grid1D(-10.0, 10.0, 64), spec.model(), SolverConfig(t_end=5.0, max_steps=3))
        assert history.steps == 3
        assert history.final.t < 5.0

    def test_append_rejects_non_increasing_time(self, uniform_history):
        with pytest.raises(DomainError):
            uniform_history.append(uniform_history.initial)

    def test_entropy_variation_selects_full_system(self):
        spec = ScenarioSpec.from_catalog("double_rarefaction", amplitude=0.1, entropy_amplitude=0.2)
        assert not init_scenario(spec, Grid1D(-5.0, 5.0, 32), spec.model()).is_isentropic
        history = run(spec, Grid1D(-10.0, 10.0, 64), spec.model(), SolverConfig(t_end=0.1))
        assert history.system == FULL
        assert all(np.array_equal(snap.m, history.initial.m) for snap in history)

    @pytest.mark.parametrize("kwargs", [{"cfl": 1.5}, {"t_end": -1.0}, {"stride": 0}, {"rho_floor_factor": 1.0},
                                        {"ux_blowup_factor": 0.5}, {"system": "navier"}, {"boundary": "open"}])
    def test_invalid_solver_config(self, kwargs):
        with pytest.raises(ConfigError):
            SolverConfig(**kwargs)

    def test_build_grid_uses_scenario_domain(self):
        spec = ScenarioSpec.from_catalog("compressive_pulse", domain=(-6.0, 6.0))
        grid = build_grid(spec, spec.model(), 128, 1.0)
        assert (grid.x_min, grid.x_max, grid.n) == (-6.0, 6.0, 128)


def tanh_snapshot(model, u, n=200):
    grid = Grid1D(-10.0, 10.0, n)
    return FieldSnapshot(t=0.0, u=u(grid.x), eta=np.full(n, math.sqrt(3.0)), m=np.ones(n), grid=grid, model=model)


class TestBlowupCheck:

    def test_riemann_variation_of_monotone_profile(self, gas3):
        snap = tanh_snapshot(gas3, lambda x: 0.5 * np.tanh(x))
        tv_s, tv_r = riemann_variation(snap)
        assert tv_s == pytest.approx(snap.u[-1] - snap.u[0], rel=1e-12)
        assert tv_r == pytest.approx(snap.u[-1] - snap.u[0], rel=1e-12)

    def test_grid_scale_oscillation_stops_psystem(self, gas3):
        smooth = tanh_snapshot(gas3, lambda x: 0.5 * np.tanh(x))
        noisy = smooth.replace(u=smooth.u + 0.01 * (-1.0) ** np.arange(smooth.grid.n))
        # a huge gradient scale keeps the gradient rules quiet
        detail = _blowup_check(noisy, 1e9, riemann_variation(smooth), SolverConfig(), PSYSTEM)
        assert "total variation" in detail
        assert _blowup_check(noisy, 1e9, riemann_variation(smooth), SolverConfig(), FULL) is None

    def test_steep_front_is_flagged(self, gas3):
        snap = tanh_snapshot(gas3, lambda x: np.where(x < 0.0, 0.5, -0.5))
        detail = _blowup_check(snap, 0.5, riemann_variation(snap), SolverConfig(), PSYSTEM)
        assert detail.startswith("front narrower")

    def test_resolved_front_is_not_flagged(self, gas3):
        snap = tanh_snapshot(gas3, lambda x: -0.5 * np.tanh(x))
        assert _blowup_check(snap, 0.1, riemann_variation(snap), SolverConfig(), PSYSTEM) is None

    def test_local_jump_ignores_distant_structure(self, gas3):
        # a large smooth step far away must not hide a narrow front of small amplitude
        def profile(x):
            return 5.0 * np.tanh((x + 6.0) / 2.0) + np.where(x < 4.0, 0.25, -0.25)

        snap = tanh_snapshot(gas3, profile)
        detail = _blowup_check(snap, 0.1, riemann_variation(snap), SolverConfig(), FULL)
        assert detail.startswith("front narrower")


class TestAccuracy:

    def test_conservation_drift(self):
        spec = ScenarioSpec.from_catalog("smooth_periodicish_bump")
        model = spec.model()
        history = run(spec, build_grid(spec, model, 512, 0.5), model, SolverConfig(t_end=0.5, stride=20))
        assert history.stop_reason is StopReason.HORIZON
        drift = conservation_drift(history)
        # tau carries truncation error; u is in flux form and telescopes to round-off
        assert drift["tau"] < 1e-7
        assert drift["u"] < 1e-8

    def test_full_system_momentum_is_conserved(self, entropy_history):
        assert entropy_history.system == FULL
        assert conservation_drift(entropy_history)["u"] < 1e-10

    def test_small_pulse_travels_at_sound_speed(self):
        spec = ScenarioSpec.from_catalog("smooth_periodicish_bump", amplitude=1e-4)
        model = spec.model()
        t_end = 4.0
        history = run(spec, build_grid(spec, model, 1024, t_end), model, SolverConfig(t_end=t_end, stride=1000))
        assert history.stop_reason is StopReason.HORIZON

        def centroid(snap):
            # s is constant across the left-moving part, so only the right-moving pulse is weighted
            weight = (snap.s - snap.s[0]) ** 2
            return float(np.sum(snap.x * weight) / np.sum(weight))

        speed = (centroid(history.final) - centroid(history.initial)) / t_end
        assert speed == pytest.approx(math.sqrt(3.0), rel=1e-3)

    def test_restriction_is_exact_for_cubics(self):
        fine, coarse = Grid1D(0.0, 1.0, 32), Grid1D(0.0, 1.0, 16)

        def cubic(x):
            return x**3 - 2.0 * x**2 + x

        restricted = restrict_to_coarse(cubic(fine.x), "far_field")
        np.testing.assert_allclose(restricted[1:-1], cubic(coarse.x)[1:-1], atol=1e-14)

    def test_self_convergence(self):
        spec = ScenarioSpec.from_catalog("double_rarefaction", amplitude=0.5)
        result = self_convergence(spec, spec.model(), SolverConfig(t_end=0.5), ns=(128, 256, 512),
                                  domain=(-10.0, 10.0))
        assert min(result["orders"]["u"] + result["orders"]["eta"]) >= 3.0

    @pytest.mark.slow
    def test_self_convergence_fine(self):
        spec = ScenarioSpec.from_catalog("double_rarefaction", amplitude=0.5)
        result = self_convergence(spec, spec.model(), SolverConfig(t_end=0.5), ns=(256, 512, 1024, 2048),
                                  domain=(-10.0, 10.0))
        assert min(result["orders"]["u"] + result["orders"]["eta"]) >= 3.5

    def test_self_convergence_needs_doubling_grids(self):
        spec = ScenarioSpec.from_catalog("double_rarefaction", amplitude=0.5)
        with pytest.raises(DomainError):
            self_convergence(spec, spec.model(), SolverConfig(t_end=0.1), ns=(64, 100, 200))


def test_simulate_helper_matches_direct_run():
    history = simulate("double_rarefaction", Grid1D(-10.0, 10.0, 32), t_end=0.2, amplitude=0.1)
    assert history.final.t == 0.2
    assert history.grid.n == 32
