import math

import numpy as np
import pytest

from qpmcascade.errors import DomainError
from qpmcascade.noisemodel import (
    LineShapeParams,
    ParasiticProcess,
    enumerate_parasitics,
    lineshape_analytic,
    lineshape_weighted,
    planck_weight,
    solve_thermal_sfg_output,
    thermal_sfg_lineshape,
    thermal_sfg_mismatch,
)
from qpmcascade.spectral import C_NM_THZ, Wavelength

LENGTH = 20.0
PUMP = Wavelength(2152.9)
WINDOW = (1480.0, 1620.0)


def quadrature_oracle(delta_k: float, length: float, panels: int = 100_000) -> float:
    """Trapezoid quadrature of the distributed-source integrand."""
    u = np.linspace(0.0, length, panels + 1)
    integrand = (u**2 / length) * np.sinc(0.5 * delta_k * u / math.pi) ** 2
    return float(np.trapezoid(integrand, u))


class TestAnalyticLineShape:
    def test_zero_detuning_limit(self):
        assert lineshape_analytic(0.0, LENGTH) == pytest.approx(LENGTH**2 / 3.0, rel=1e-12)

    def test_matches_quadrature_across_grid(self):
        for dk in np.linspace(-10.0 / LENGTH, 10.0 / LENGTH, 201):
            oracle = quadrature_oracle(float(dk), LENGTH)
            assert lineshape_analytic(float(dk), LENGTH) == pytest.approx(oracle, rel=1e-6)

    def test_series_branch_is_continuous(self):
        # the exact branch loses ~8 digits to cancellation right at the
        # series cutoff, so continuity holds at that level, not at 1e-15
        just_below = lineshape_analytic(0.99e-4 / LENGTH, LENGTH)
        just_above = lineshape_analytic(1.01e-4 / LENGTH, LENGTH)
        assert just_below == pytest.approx(just_above, rel=1e-7)

    def test_broader_than_plain_sinc2(self):
        dk = np.linspace(-1.0, 1.0, 20001)
        shape = np.array([lineshape_analytic(float(d), LENGTH) for d in dk])
        shape /= shape.max()
        sinc2 = np.sinc(0.5 * dk * LENGTH / math.pi) ** 2

        def fwhm(y):
            above = dk[y >= 0.5]
            return above[-1] - above[0]

        assert fwhm(shape) > fwhm(sinc2)


class TestWeightedLineShape:
    def test_parabolic_weight_reproduces_analytic(self):
        # a = coefficients of (L - z)^2 / L
        params = LineShapeParams(
            length_mm=LENGTH,
            delta_k_of_lam=lambda lam: 0.2 * (lam - 1550.0),
            weights=(LENGTH, -2.0, 1.0 / LENGTH),
        )
        grid = np.linspace(1545.0, 1555.0, 101)
        spectrum = lineshape_weighted(params, grid)
        for lam, value in zip(spectrum.wavelength_nm, spectrum.intensity):
            expected = lineshape_analytic(0.2 * (lam - 1550.0), LENGTH)
            assert value == pytest.approx(expected, rel=1e-3)

    def test_uniform_weight_matches_independent_quadrature(self):
        params = LineShapeParams(
            length_mm=LENGTH,
            delta_k_of_lam=lambda lam: 0.2 * (lam - 1550.0),
            weights=(1.0,),
        )
        grid = np.linspace(1546.0, 1554.0, 41)
        spectrum = lineshape_weighted(params, grid)
        z = np.linspace(0.0, LENGTH, 200_001)
        for lam, value in zip(spectrum.wavelength_nm, spectrum.intensity):
            dk = 0.2 * (lam - 1550.0)
            oracle = float(np.trapezoid(np.sinc(0.5 * dk * (LENGTH - z) / math.pi) ** 2, z))
            assert value == pytest.approx(oracle, rel=1e-3)

    def test_zero_weights_give_zero_spectrum(self):
        params = LineShapeParams(
            length_mm=LENGTH, delta_k_of_lam=lambda lam: lam - 1550.0, weights=(0.0, 0.0)
        )
        spectrum = lineshape_weighted(params, np.linspace(1545.0, 1555.0, 11))
        assert np.all(spectrum.intensity == 0.0)

    def test_linear_in_weight_vector(self):
        grid = np.linspace(1546.0, 1554.0, 21)
        dk = lambda lam: 0.3 * (lam - 1550.0)
        one = lineshape_weighted(LineShapeParams(LENGTH, dk, (1.0, 0.5)), grid)
        two = lineshape_weighted(LineShapeParams(LENGTH, dk, (0.2, 0.1)), grid)
        combo = lineshape_weighted(LineShapeParams(LENGTH, dk, (1.2, 0.6)), grid)
        assert np.allclose(combo.intensity, one.intensity + two.intensity, rtol=1e-12)

    def test_asymmetric_weight_with_curved_detuning_skews_peak(self):
        # quadratic detuning map makes the wavelength-space shape sensitive
        # to the position weight; the skew sign must match a fine quadrature
        dk = lambda lam: 0.25 * (lam - 1550.0) + 0.01 * (lam - 1550.0) ** 2
        grid = np.linspace(1544.0, 1556.0, 241)
        spectrum = lineshape_weighted(
            LineShapeParams(LENGTH, dk, (0.0, 1.0)), grid,
        )

        def skew(lams, vals):
            total = np.sum(vals)
            mean = np.sum(lams * vals) / total
            var = np.sum((lams - mean) ** 2 * vals) / total
            return float(np.sum((lams - mean) ** 3 * vals) / total / var**1.5)

        measured = skew(spectrum.wavelength_nm, spectrum.intensity)
        z = np.linspace(0.0, LENGTH, 100_001)
        oracle_vals = np.array(
            [
                float(np.trapezoid(z * np.sinc(0.5 * dk(l) * (LENGTH - z) / math.pi) ** 2, z))
                for l in grid
            ]
        )
        oracle = skew(grid, oracle_vals)
        assert abs(measured) > 1e-3
        assert math.copysign(1.0, measured) == math.copysign(1.0, oracle)
        assert measured == pytest.approx(oracle, rel=1e-2)

    def test_minimum_panel_count_enforced(self):
        with pytest.raises(DomainError):
            LineShapeParams(LENGTH, lambda lam: 0.0, (1.0,), z_panels=100)

    def test_empty_grid_rejected(self):
        params = LineShapeParams(LENGTH, lambda lam: 0.0, (1.0,))
        with pytest.raises(DomainError):
            lineshape_weighted(params, [])


class TestPlanckWeight:
    def test_band_center_normalization(self):
        center = Wavelength(5325.0)
        assert planck_weight(center, 332.0, center) == 1.0

    def test_mid_ir_band_is_flat_within_five_percent(self):
        center = Wavelength(5325.0)
        for lam_nm in np.linspace(5250.0, 5400.0, 31):
            weight = planck_weight(Wavelength(float(lam_nm)), 332.0, center)
            assert abs(weight - 1.0) < 0.05

    def test_radiance_rises_with_temperature(self):
        # un-normalized Planck radiance at fixed mid-IR wavelength
        lam_um, c2 = 5.325, 14387.7688
        radiance = lambda t: lam_um**-5 / math.expm1(c2 / (lam_um * t))
        assert radiance(342.0) > radiance(332.0)

    def test_nonpositive_temperature_rejected(self):
        with pytest.raises(DomainError):
            planck_weight(Wavelength(5325.0), 0.0, Wavelength(5325.0))


class TestThermalSfg:
    def test_phase_matched_output_in_filter_window(self, solved_sections):
        _, step2 = solved_sections
        output = solve_thermal_sfg_output(step2, PUMP, WINDOW)
        assert output is not None
        assert WINDOW[0] < output < WINDOW[1]
        driver = 1.0 / (1.0 / output - 1.0 / PUMP.nm)
        assert 4500.0 < driver < 6500.0

    def test_separation_constant_under_pump_detuning(self, solved_sections):
        _, step2 = solved_sections
        base = solve_thermal_sfg_output(step2, PUMP, (1480.0, 1650.0))
        detuned_pump = Wavelength(PUMP.nm + 10.0)
        shifted = solve_thermal_sfg_output(step2, detuned_pump, (1480.0, 1650.0))
        sep_base = C_NM_THZ / base - C_NM_THZ / PUMP.nm
        sep_shifted = C_NM_THZ / shifted - C_NM_THZ / detuned_pump.nm
        assert abs(sep_shifted - sep_base) < 0.1

    def test_peak_temperature_slope_negative(self, solved_sections):
        _, step2 = solved_sections
        temps = [step2.temperature_C + d for d in (0.0, 2.5, 5.0, 7.5, 10.0)]
        outputs = [solve_thermal_sfg_output(step2, PUMP, WINDOW, temp_C=t) for t in temps]
        assert all(b < a for a, b in zip(outputs, outputs[1:]))

    def test_lineshape_peaks_at_solved_output(self, solved_sections):
        _, step2 = solved_sections
        peak_nm = solve_thermal_sfg_output(step2, PUMP, WINDOW)
        grid = np.linspace(peak_nm - 8.0, peak_nm + 8.0, 321)
        spectrum = thermal_sfg_lineshape(step2, PUMP, grid)
        found = spectrum.wavelength_nm[int(np.argmax(spectrum.intensity))]
        assert abs(found - peak_nm) < 0.1

    def test_only_second_section_matters(self, solved_sections):
        # the thermal line is a function of the step-2 section alone
        step1, step2 = solved_sections
        grid = np.linspace(1550.0, 1565.0, 31)
        reference = thermal_sfg_lineshape(step2, PUMP, grid)
        again = thermal_sfg_lineshape(step2, PUMP, grid)
        assert np.array_equal(reference.intensity, again.intensity)
        import inspect

        signature = inspect.signature(thermal_sfg_lineshape)
        assert "step1" not in signature.parameters

    def test_planck_weighting_opt_in(self, solved_sections):
        _, step2 = solved_sections
        grid = np.linspace(1550.0, 1565.0, 31)
        flat = thermal_sfg_lineshape(step2, PUMP, grid)
        planck = thermal_sfg_lineshape(step2, PUMP, grid, planck_temperature_K=332.0)
        ratio = planck.intensity / flat.intensity
        assert not np.allclose(ratio, 1.0)
        assert np.all(np.abs(ratio - 1.0) < 0.2)

    def test_output_must_be_below_pump(self, solved_sections):
        _, step2 = solved_sections
        with pytest.raises(DomainError):
            thermal_sfg_mismatch(step2, PUMP, 2200.0)


class TestEnumerateParasitics:
    def test_shg_in_near_ir_window(self, solved_sections):
        _, step2 = solved_sections
        found = enumerate_parasitics(step2, PUMP, (1000.0, 1200.0))
        kinds = {p.kind: p for p in found}
        assert "SHG_pump" in kinds
        assert kinds["SHG_pump"].output_nm == pytest.approx(1076.45, abs=0.01)
        assert kinds["SHG_pump"].power_law == 2

    def test_thermal_sfg_in_telecom_window(self, solved_sections):
        _, step2 = solved_sections
        found = enumerate_parasitics(step2, PUMP, WINDOW)
        kinds = {p.kind: p for p in found}
        assert "thermal_SFG" in kinds
        thermal = kinds["thermal_SFG"]
        assert WINDOW[0] < thermal.output_nm < WINDOW[1]
        assert 4500.0 < thermal.drivers_nm[0] < 6500.0
        assert thermal.power_law == 1

    def test_empty_window_allows_empty_list(self, solved_sections):
        _, step2 = solved_sections
        assert enumerate_parasitics(step2, PUMP, (400.0, 500.0)) == []

    def test_energy_consistency_enforced(self):
        with pytest.raises(DomainError):
            ParasiticProcess(
                kind="SHG_pump", output_nm=1000.0, drivers_nm=(2152.9, 2152.9), power_law=2
            )

    def test_window_validation(self, solved_sections):
        _, step2 = solved_sections
        with pytest.raises(DomainError):
            enumerate_parasitics(step2, PUMP, (1600.0, 1500.0))
