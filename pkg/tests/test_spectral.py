import numpy as np
import pytest

from qpmcascade.errors import DomainError
from qpmcascade.spectral import (
    C_NM_THZ,
    Frequency,
    ProcessKind,
    Wavelength,
    dfg_target,
    frequency_to_wavelength,
    process_output,
    sfg_output,
    shg_output,
    wavelength_to_frequency,
)


class TestWavelengthFrequency:
    def test_known_frequencies(self):
        assert wavelength_to_frequency(Wavelength(1532.8)).thz == pytest.approx(195.585, abs=1e-3)
        assert wavelength_to_frequency(Wavelength(2152.9)).thz == pytest.approx(139.251, abs=1e-3)
        diff = (
            wavelength_to_frequency(Wavelength(1532.8)).thz
            - wavelength_to_frequency(Wavelength(2152.9)).thz
        )
        assert diff == pytest.approx(56.334, abs=1e-3)

    def test_speed_of_light_definition(self):
        assert wavelength_to_frequency(Wavelength(C_NM_THZ)).thz == 1.0

    def test_hand_evaluated_point(self):
        # c / 1561.6 computed by hand
        assert wavelength_to_frequency(Wavelength(1561.6)).thz == pytest.approx(191.978, abs=1e-3)

    def test_round_trip_relative_error(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            lam = float(rng.uniform(100.0, 20000.0))
            back = frequency_to_wavelength(wavelength_to_frequency(Wavelength(lam))).nm
            assert abs(back - lam) / lam < 1e-9

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
    def test_invalid_inputs_rejected(self, bad):
        with pytest.raises(DomainError):
            Wavelength(bad)
        with pytest.raises(DomainError):
            Frequency(bad)


class TestDfgTarget:
    def test_first_step(self):
        assert dfg_target(Wavelength(637.2), Wavelength(2152.9)).nm == pytest.approx(905.08, abs=0.01)

    def test_second_step(self):
        assert dfg_target(Wavelength(905.1), Wavelength(2152.9)).nm == pytest.approx(1561.62, abs=0.01)

    def test_target_longer_than_signal(self):
        out = dfg_target(Wavelength(637.2), Wavelength(2152.9))
        assert out.nm > 637.2

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DomainError):
            dfg_target(Wavelength(1000.0), Wavelength(1000.0))

    def test_pump_more_energetic_rejected(self):
        with pytest.raises(DomainError):
            dfg_target(Wavelength(1000.0), Wavelength(900.0))


class TestSfgOutput:
    def test_second_harmonic(self):
        assert sfg_output(Wavelength(2152.9), Wavelength(2152.9)).nm == pytest.approx(1076.45, abs=0.01)
        assert shg_output(Wavelength(2152.9)).nm == pytest.approx(1076.45, abs=0.01)

    def test_thermal_band(self):
        assert sfg_output(Wavelength(2152.9), Wavelength(5321.7)).nm == pytest.approx(1532.8, abs=0.05)

    def test_commutative_exactly(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a = Wavelength(float(rng.uniform(400.0, 6000.0)))
            b = Wavelength(float(rng.uniform(400.0, 6000.0)))
            assert sfg_output(a, b).nm == sfg_output(b, a).nm


class TestEnergyConservation:
    def test_dfg_then_sfg_recovers_signal(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            signal = Wavelength(float(rng.uniform(500.0, 1500.0)))
            pump = Wavelength(signal.nm * float(rng.uniform(1.5, 6.0)))
            target = dfg_target(signal, pump)
            recovered = sfg_output(target, pump)
            assert abs(recovered.nm - signal.nm) / signal.nm < 1e-9

    def test_process_output_shg_requires_degenerate(self):
        with pytest.raises(DomainError):
            process_output(ProcessKind.SHG, Wavelength(1000.0), Wavelength(1001.0))

    def test_wavelength_ordering_helpers(self):
        assert Wavelength(500.0) < Wavelength(600.0)
        assert Wavelength(1500.0).um == pytest.approx(1.5)
