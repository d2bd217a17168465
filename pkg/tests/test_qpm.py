import math

import numpy as np
import pytest

from qpmcascade.dispersion import BulkIndexProvider
from qpmcascade.errors import DesignError, DomainError, NoSolutionError
from qpmcascade.qpm import (
    ProcessSpec,
    SectionSpec,
    degenerate_operating_point,
    phase_mismatch,
    phasematch_map,
    qpm_transfer,
    section_with_solved_period,
    solve_phasematched_pump,
    solve_poling_period,
    tuning_curve,
)
from qpmcascade.spectral import ProcessKind, Wavelength, dfg_target

T0 = 59.26
PUMP = Wavelength(2152.9)
SIGNAL = Wavelength(637.2)


class TestQpmTransfer:
    def test_peak(self):
        assert qpm_transfer(0.0, 20.0) == 1.0

    def test_first_zero(self):
        # dk*L/2 = pi
        assert qpm_transfer(2.0 * math.pi / 20.0, 20.0) == pytest.approx(0.0, abs=1e-30)

    def test_half_pi_point(self):
        assert qpm_transfer(math.pi / 20.0, 20.0) == pytest.approx((2.0 / math.pi) ** 2, rel=1e-12)

    def test_even_and_bounded(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            dk = float(rng.uniform(-5.0, 5.0))
            t = qpm_transfer(dk, 20.0)
            assert 0.0 <= t <= 1.0
            assert t == qpm_transfer(-dk, 20.0)
            if dk != 0.0:
                assert t < 1.0

    def test_length_validation(self):
        with pytest.raises(DomainError):
            qpm_transfer(0.1, 0.0)


class TestSectionSpec:
    def test_qpm_order_must_be_odd(self, ln_provider):
        with pytest.raises(DomainError):
            SectionSpec("step1", 20.0, 12.0, T0, ln_provider, qpm_order=2)

    def test_role_validation(self, ln_provider):
        with pytest.raises(DomainError):
            SectionSpec("middle", 20.0, 12.0, T0, ln_provider)

    def test_thermal_expansion_optional(self, ln_provider):
        section = SectionSpec(
            "step1", 20.0, 12.0, T0, ln_provider, expansion_per_C=1.5e-5, expansion_ref_C=25.0
        )
        assert section.period_um_at(25.0) == 12.0
        assert section.period_um_at(125.0) == pytest.approx(12.0 * (1 + 1.5e-3))


class TestProcessSpec:
    def test_energy_conservation_enforced(self, solved_sections):
        step1, _ = solved_sections
        with pytest.raises(DomainError, match="energy conservation"):
            ProcessSpec(
                kind=ProcessKind.DFG,
                lam_in=SIGNAL,
                lam_pump=PUMP,
                lam_out=Wavelength(900.0),
                section=step1,
            )

    def test_factory_builds_consistent_triple(self, solved_sections):
        step1, _ = solved_sections
        process = ProcessSpec.dfg(SIGNAL, PUMP, step1)
        assert process.lam_out.nm == pytest.approx(905.08, abs=0.01)


class TestSolvePolingPeriod:
    def test_round_trip_zero_mismatch(self, solved_sections):
        step1, step2 = solved_sections
        for section, lam_in in ((step1, SIGNAL), (step2, dfg_target(SIGNAL, PUMP))):
            process = ProcessSpec.dfg(lam_in, PUMP, section)
            assert abs(phase_mismatch(process)) < 1e-9

    def test_periods_in_plausible_band(self, solved_sections):
        for section in solved_sections:
            assert 1.0 < section.poling_period_um < 50.0

    def test_order_three_triples_period(self, ln_provider):
        first = solve_poling_period(ProcessKind.DFG, SIGNAL, PUMP, T0, ln_provider, qpm_order=1)
        third = solve_poling_period(ProcessKind.DFG, SIGNAL, PUMP, T0, ln_provider, qpm_order=3)
        assert third == pytest.approx(3.0 * first, rel=1e-14)

    def test_dispersionless_medium_is_unphase_matchable(self, constant_material):
        # zero bulk mismatch: no positive period exists
        provider = BulkIndexProvider(constant_material)
        with pytest.raises(DesignError):
            solve_poling_period(ProcessKind.DFG, SIGNAL, PUMP, 25.0, provider)

    def test_dispersionless_medium_with_no_grating_is_matched(self, constant_material):
        provider = BulkIndexProvider(constant_material)
        section = SectionSpec("step1", 20.0, 1e15, 25.0, provider)
        process = ProcessSpec.dfg(SIGNAL, PUMP, section)
        assert abs(phase_mismatch(process)) < 1e-9

    def test_temperature_perturbation_stays_in_main_lobe(self, solved_sections):
        step1, _ = solved_sections
        process = ProcessSpec.dfg(SIGNAL, PUMP, step1)
        dk = phase_mismatch(process, temp_C=T0 + 1.0)
        assert 0 < abs(dk) * step1.length_mm / 2.0 < math.pi


class TestSolvePhasematchedPump:
    def test_inverse_of_construction(self, solved_sections):
        step1, _ = solved_sections
        root = solve_phasematched_pump(step1, ProcessKind.DFG, SIGNAL)
        assert abs(root.nm - PUMP.nm) < 1e-6
        process = ProcessSpec.dfg(SIGNAL, PUMP, step1)
        assert abs(phase_mismatch(process, lam_pump=root)) < 1e-9

    def test_temperature_shift_moves_root_continuously(self, solved_sections):
        step1, _ = solved_sections
        root0 = solve_phasematched_pump(step1, ProcessKind.DFG, SIGNAL)
        root5 = solve_phasematched_pump(step1, ProcessKind.DFG, SIGNAL, temp_C=T0 + 5.0)
        assert 0 < abs(root5.nm - root0.nm) < 50.0

    def test_empty_window_raises_listing_window(self, solved_sections):
        step1, _ = solved_sections
        with pytest.raises(NoSolutionError, match=r"\[2400.0, 2500.0\]"):
            solve_phasematched_pump(
                step1, ProcessKind.DFG, SIGNAL, window_nm=(2400.0, 2500.0)
            )

    def test_randomized_round_trips(self, ln_provider):
        rng = np.random.default_rng(123)
        for _ in range(20):
            signal = Wavelength(float(rng.uniform(600.0, 950.0)))
            temp = float(rng.uniform(30.0, 90.0))
            pump_true = Wavelength(float(rng.uniform(2000.0, 2500.0)))
            section = section_with_solved_period(
                "step1", 20.0, ln_provider, ProcessKind.DFG, signal, pump_true, temp
            )
            process = ProcessSpec.dfg(signal, pump_true, section)
            assert abs(phase_mismatch(process, temp_C=temp)) < 1e-9
            root = solve_phasematched_pump(section, ProcessKind.DFG, signal, temp_C=temp)
            assert abs(phase_mismatch(process, temp_C=temp, lam_pump=root)) < 1e-9


class TestPhasematchMap:
    def test_single_cell_at_operating_point(self, solved_sections):
        step1, step2 = solved_sections
        pm = phasematch_map(step1, step2, SIGNAL, [T0], [PUMP.nm])
        assert pm.step1[0, 0] == pytest.approx(1.0, abs=1e-9)
        assert pm.step2[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_values_bounded_and_smooth(self, solved_sections):
        # default map resolution: 61 x 101 over the standard scan windows
        step1, step2 = solved_sections
        pm = phasematch_map(
            step1, step2, SIGNAL, np.linspace(40.0, 100.0, 61), np.linspace(2100.0, 2200.0, 101)
        )
        for matrix in (pm.step1, pm.step2):
            assert np.nanmin(matrix) >= 0.0 and np.nanmax(matrix) <= 1.0
            interior = matrix[1:-1, 1:-1]
            neighbor_mean = (
                matrix[:-2, 1:-1] + matrix[2:, 1:-1] + matrix[1:-1, :-2] + matrix[1:-1, 2:]
            ) / 4.0
            assert np.nanmax(np.abs(interior - neighbor_mean)) < 0.5

    def test_cells_match_pointwise_recomputation(self, solved_sections):
        step1, step2 = solved_sections
        temps = [50.0, 59.26, 70.0]
        pumps = [2140.0, 2152.9, 2170.0]
        pm = phasematch_map(step1, step2, SIGNAL, temps, pumps)
        for i, temp in enumerate(temps):
            for j, pump_nm in enumerate(pumps):
                pump = Wavelength(pump_nm)
                p1 = ProcessSpec.dfg(SIGNAL, pump, step1)
                expect1 = qpm_transfer(phase_mismatch(p1, temp_C=temp), step1.length_mm)
                mid = dfg_target(SIGNAL, pump)
                p2 = ProcessSpec.dfg(mid, pump, step2)
                expect2 = qpm_transfer(phase_mismatch(p2, temp_C=temp), step2.length_mm)
                assert pm.step1[i, j] == expect1
                assert pm.step2[i, j] == expect2

    def test_out_of_range_cells_marked_missing(self, solved_sections):
        step1, step2 = solved_sections
        # 300 C exceeds the material temperature range: cells become NaN
        pm = phasematch_map(step1, step2, SIGNAL, [59.26, 300.0], [2152.9])
        assert not np.isnan(pm.step1[0, 0])
        assert np.isnan(pm.step1[1, 0]) and np.isnan(pm.step2[1, 0])

    def test_worker_pool_matches_serial(self, solved_sections):
        step1, step2 = solved_sections
        temps = np.linspace(55.0, 65.0, 7)
        pumps = np.linspace(2145.0, 2160.0, 9)
        serial = phasematch_map(step1, step2, SIGNAL, temps, pumps, workers=1)
        pooled = phasematch_map(step1, step2, SIGNAL, temps, pumps, workers=4)
        assert np.array_equal(serial.step1, pooled.step1)
        assert np.array_equal(serial.step2, pooled.step2)

    def test_degenerate_temperature_exists(self, solved_sections):
        step1, step2 = solved_sections
        temp, pump_nm, t1, t2 = degenerate_operating_point(
            step1, step2, SIGNAL, (40.0, 100.0), (2100.0, 2200.0)
        )
        assert t1 > 0.99 and t2 > 0.99
        assert 40.0 <= temp <= 100.0 and 2100.0 <= pump_nm <= 2200.0


class TestTuningCurve:
    def test_zero_offset_returns_operating_target(self, solved_sections):
        step1, step2 = solved_sections
        point = tuning_curve(step1, step2, SIGNAL, PUMP, [0.0])[0]
        target0 = dfg_target(dfg_target(SIGNAL, PUMP), PUMP)
        assert point.target_nm == pytest.approx(target0.nm, abs=1e-6)
        assert point.transfer == pytest.approx(1.0, abs=1e-9)

    def test_positive_offset_shifts_to_shorter_wavelengths(self, solved_sections):
        step1, step2 = solved_sections
        points = tuning_curve(step1, step2, SIGNAL, PUMP, [-6.1, 0.0, 4.6])
        assert points[2].target_nm < points[1].target_nm < points[0].target_nm

    def test_monotone_over_tuning_range(self, solved_sections):
        step1, step2 = solved_sections
        offsets = np.linspace(-6.0, 5.0, 23)
        targets = [p.target_nm for p in tuning_curve(step1, step2, SIGNAL, PUMP, offsets)]
        assert all(b < a for a, b in zip(targets, targets[1:]))

    def test_no_root_marks_point_missing(self, solved_sections):
        step1, step2 = solved_sections
        point = tuning_curve(
            step1, step2, SIGNAL, PUMP, [0.0], window_nm=(1480.0, 1500.0)
        )[0]
        assert math.isnan(point.target_nm)
