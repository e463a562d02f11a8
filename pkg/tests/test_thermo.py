import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shared.errors import DomainError
from shared.thermo import (GasModel, ThermoState, check_identities, derive_constants, eta_from_tau,
                           internal_energy, m_from_S, pressure, S_from_m, tau_from_eta,
                           wave_speed)

K_strategy = st.floats(min_value=0.01, max_value=100.0, allow_nan=False, allow_infinity=False)
gamma_strategy = st.floats(min_value=1.1, max_value=7.0, allow_nan=False, allow_infinity=False)


class TestConstants:

    @given(K=K_strategy, gamma=gamma_strategy)
    @settings(max_examples=50)
    def test_identities_hold(self, K, gamma):
        constants = derive_constants(K, gamma)
        assert math.isclose(constants.K_p, (gamma - 1.0) / (2.0 * gamma) * constants.K_c, rel_tol=1e-12)
        assert math.isclose(constants.K_tau * constants.K_c, (gamma - 1.0) / 2.0, rel_tol=1e-12)
        assert check_identities(constants, gamma)

    def test_gamma_three_values(self):
        K_tau, K_p, K_c = derive_constants(1.0, 3.0)
        assert K_tau == pytest.approx(math.sqrt(3.0), rel=1e-14)
        assert K_p == pytest.approx(3.0**-1.5, rel=1e-14)
        assert K_c == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-14)

    @pytest.mark.parametrize("K, gamma", [(0.0, 1.4), (-1.0, 1.4), (1.0, 1.0), (1.0, 0.5), (math.inf, 1.4)])
    def test_invalid_inputs(self, K, gamma):
        with pytest.raises(DomainError):
            derive_constants(K, gamma)

    def test_model_is_immutable(self, gas3):
        with pytest.raises(Exception):
            gas3.gamma = 2.0

    def test_model_rejects_bad_cv(self):
        with pytest.raises(DomainError):
            GasModel(c_v=0.0)


class TestClosure:

    @given(tau=st.floats(min_value=1e-3, max_value=1e3), gamma=gamma_strategy)
    @settings(max_examples=50)
    def test_tau_eta_round_trip(self, tau, gamma):
        model = GasModel(K=1.0, gamma=gamma)
        assert tau_from_eta(eta_from_tau(tau, model), model) == pytest.approx(tau, rel=1e-10)

    def test_non_positive_arguments(self, gas3):
        with pytest.raises(DomainError):
            eta_from_tau(0.0, gas3)
        with pytest.raises(DomainError):
            tau_from_eta(-1.0, gas3)
        with pytest.raises(DomainError):
            pressure(1.0, 0.0, gas3)

    @pytest.mark.parametrize("gamma", [1.4, 5.0 / 3.0, 2.0, 3.0, 7.0])
    def test_pressure_and_wave_speed_in_tau(self, gamma):
        model = GasModel(K=1.3, gamma=gamma)
        tau = np.array([0.5, 1.0, 2.5])
        m = np.array([1.0, 1.2, 0.8])
        eta = eta_from_tau(tau, model)
        np.testing.assert_allclose(pressure(eta, m, model), model.K * m**2 * tau ** (-gamma), rtol=1e-12)
        expected_c = math.sqrt(model.K * gamma) * tau ** (-(gamma + 1.0) / 2.0) * m
        np.testing.assert_allclose(wave_speed(eta, m, model), expected_c, rtol=1e-12)

    def test_internal_energy(self, gas3):
        assert internal_energy(2.0, 3.0, gas3) == pytest.approx(3.0)

    def test_entropy_variable_round_trip(self):
        assert m_from_S(0.0) == pytest.approx(1.0)
        S = np.array([-1.0, 0.0, 2.0])
        np.testing.assert_allclose(S_from_m(m_from_S(S, c_v=2.0), c_v=2.0), S, atol=1e-14)

    def test_state_eulerian_sound_speed(self):
        model = GasModel(K=1.0, gamma=1.4)
        state = ThermoState(u=0.0, eta=eta_from_tau(2.0, model), m=1.1, model=model)
        expected = math.sqrt(model.gamma * state.p / state.rho)
        assert state.eulerian_sound_speed == pytest.approx(expected, rel=1e-12)
        assert state.tau == pytest.approx(2.0)
        assert state.S == pytest.approx(2.0 * math.log(1.1))
