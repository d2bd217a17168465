"""Quasi-phase-matching engine.

Sign conventions (collinear, scalar, all quantities per millimeter):

* wavevector k(lam) = 2*pi*n_eff(lam, T) / lam, in rad/mm,
* grating vector G = 2*pi*m / period, with m the (odd) QPM order,
* DFG:        delta_k = k_in - k_out - k_pump - G,
* SFG / SHG:  delta_k = k_out - k_in - k_pump - G.

With normal dispersion both bulk mismatches are positive, so a positive
poling period always exists.  Conversion is proportional to
sinc^2(delta_k * L / 2) and peaks at delta_k = 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CapabilityError,
    DesignError,
    DomainError,
    NoSolutionError,
    RangeError,
)
from .spectral import ProcessKind, Wavelength, dfg_target, energy_residual, process_output

TWO_PI = 2.0 * math.pi

# Pump wavelength search window (nm): the tuning range of the pump laser.
PUMP_WINDOW_NM = (1980.0, 2528.0)
# Target wavelength search window (nm): the tunable filter range.
TARGET_WINDOW_NM = (1480.0, 1620.0)

_ENERGY_TOL = 1e-9


def wavevector(provider, lam: Wavelength, temp_C: float) -> float:
    """k = 2*pi*n_eff/lam in rad/mm."""
    n = provider.effective_index(lam, temp_C)
    return TWO_PI * n * 1e6 / lam.nm


@dataclass(frozen=True)
class SectionSpec:
    """One periodically poled section of the waveguide.

    ``expansion_per_C`` optionally applies a linear thermal expansion to the
    poling period relative to ``expansion_ref_C``; it is zero (off) by
    default.
    """

    role: str
    length_mm: float
    poling_period_um: float
    temperature_C: float
    index_provider: object
    qpm_order: int = 1
    expansion_per_C: float = 0.0
    expansion_ref_C: float = 25.0

    def __post_init__(self):
        if self.role not in ("step1", "step2"):
            raise DomainError(f"section role must be step1 or step2, got {self.role!r}")
        if not self.length_mm > 0:
            raise DomainError("section length must be positive")
        if not self.poling_period_um > 0:
            raise DomainError("poling period must be positive")
        if self.qpm_order < 1 or self.qpm_order % 2 == 0:
            raise DomainError(
                f"qpm_order must be an odd positive integer, got {self.qpm_order}"
            )

    def period_um_at(self, temp_C: float) -> float:
        return self.poling_period_um * (
            1.0 + self.expansion_per_C * (temp_C - self.expansion_ref_C)
        )

    def at_temperature(self, temp_C: float) -> "SectionSpec":
        return replace(self, temperature_C=temp_C)


@dataclass(frozen=True)
class ProcessSpec:
    """A three-wave process bound to one section.

    The wavelength triple must satisfy energy conservation to better than
    1e-9 relative; use :meth:`for_kind` to construct consistent triples.
    """

    kind: ProcessKind
    lam_in: Wavelength
    lam_pump: Wavelength
    lam_out: Wavelength
    section: SectionSpec

    def __post_init__(self):
        residual = energy_residual(self.kind, self.lam_in, self.lam_pump, self.lam_out)
        if residual > _ENERGY_TOL:
            raise DomainError(
                f"{self.kind.value} triple violates energy conservation by "
                f"{residual:.3e} relative (tolerance {_ENERGY_TOL})"
            )

    @classmethod
    def for_kind(
        cls, kind: ProcessKind, lam_in: Wavelength, lam_pump: Wavelength, section: SectionSpec
    ) -> "ProcessSpec":
        return cls(
            kind=kind,
            lam_in=lam_in,
            lam_pump=lam_pump,
            lam_out=process_output(kind, lam_in, lam_pump),
            section=section,
        )

    @classmethod
    def dfg(cls, lam_signal: Wavelength, lam_pump: Wavelength, section: SectionSpec) -> "ProcessSpec":
        return cls.for_kind(ProcessKind.DFG, lam_signal, lam_pump, section)

    @classmethod
    def sfg(cls, lam_a: Wavelength, lam_b: Wavelength, section: SectionSpec) -> "ProcessSpec":
        return cls.for_kind(ProcessKind.SFG, lam_a, lam_b, section)


def phase_mismatch(
    process: ProcessSpec,
    temp_C: float | None = None,
    lam_pump: Wavelength | None = None,
) -> float:
    """delta_k in rad/mm at the given temperature and pump wavelength.

    The output wavelength is recomputed from (lam_in, pump) so that the
    evaluated triple always conserves energy, whatever pump is probed.
    """
    section = process.section
    temp = section.temperature_C if temp_C is None else temp_C
    pump = process.lam_pump if lam_pump is None else lam_pump
    lam_out = process_output(process.kind, process.lam_in, pump)
    provider = section.index_provider
    k_in = wavevector(provider, process.lam_in, temp)
    k_out = wavevector(provider, lam_out, temp)
    k_pump = wavevector(provider, pump, temp)
    grating = TWO_PI * section.qpm_order * 1e3 / section.period_um_at(temp)
    if process.kind is ProcessKind.DFG:
        return k_in - k_out - k_pump - grating
    return k_out - k_in - k_pump - grating


def qpm_transfer(delta_k_per_mm: float, length_mm: float) -> float:
    """Normalized transfer sinc^2(delta_k * L / 2), with sinc(0) = 1."""
    if not length_mm > 0:
        raise DomainError("length must be positive")
    x = 0.5 * delta_k_per_mm * length_mm
    return float(np.sinc(x / math.pi) ** 2)


def bulk_mismatch(
    kind: ProcessKind,
    lam_in: Wavelength,
    lam_pump: Wavelength,
    temp_C: float,
    provider,
) -> float:
    """Phase mismatch without any grating contribution, rad/mm."""
    lam_out = process_output(kind, lam_in, lam_pump)
    k_in = wavevector(provider, lam_in, temp_C)
    k_out = wavevector(provider, lam_out, temp_C)
    k_pump = wavevector(provider, lam_pump, temp_C)
    if kind is ProcessKind.DFG:
        return k_in - k_out - k_pump
    return k_out - k_in - k_pump


def solve_poling_period(
    kind: ProcessKind,
    lam_in: Wavelength,
    lam_pump: Wavelength,
    temp_C: float,
    provider,
    qpm_order: int = 1,
) -> float:
    """Poling period (um) that phase-matches the process at (T, pump).

    Raises :class:`DesignError` when the bulk mismatch has the wrong sign
    for a positive period.
    """
    bulk = bulk_mismatch(kind, lam_in, lam_pump, temp_C, provider)
    if bulk <= 0.0:
        raise DesignError(
            f"bulk mismatch {bulk:.6g} rad/mm is not positive; "
            f"no positive poling period phase-matches this {kind.value} process"
        )
    return TWO_PI * qpm_order / bulk * 1e3


def section_with_solved_period(
    role: str,
    length_mm: float,
    provider,
    kind: ProcessKind,
    lam_in: Wavelength,
    lam_pump: Wavelength,
    temp_C: float,
    qpm_order: int = 1,
) -> SectionSpec:
    """Build a section whose period is solved at the given operating point."""
    period = solve_poling_period(kind, lam_in, lam_pump, temp_C, provider, qpm_order)
    return SectionSpec(
        role=role,
        length_mm=length_mm,
        poling_period_um=period,
        temperature_C=temp_C,
        index_provider=provider,
        qpm_order=qpm_order,
    )


def _bisect_root(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float,
    f_hi: float,
    tol: float = 1e-9,
) -> float:
    """Bisection to float spacing, then guarded secant polish.

    Assumes a sign change on [lo, hi].  Deterministic.
    """
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    a, b, fa, fb = lo, hi, f_lo, f_hi
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        fm = func(mid)
        if fm == 0.0:
            return mid
        if (fa < 0.0) != (fm < 0.0):
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    root, f_root = (a, fa) if abs(fa) <= abs(fb) else (b, fb)
    # Secant polish: accept steps only while they shrink |f|.
    x0, f0, x1, f1 = a, fa, b, fb
    for _ in range(8):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (min(a, b) <= x2 <= max(a, b)):
            break
        f2 = func(x2)
        if abs(f2) >= abs(f_root):
            break
        root, f_root = x2, f2
        x0, f0, x1, f1 = x1, f1, x2, f2
        if abs(f_root) < tol:
            break
    return root


def _scan_for_bracket(
    func: Callable[[float], float], lo: float, hi: float, points: int
) -> tuple[float, float, float, float] | None:
    """First sign-change bracket on a uniform scan, lowest abscissa first.

    Grid points where ``func`` raises a domain/range error are skipped;
    brackets require two consecutive valid evaluations.
    """
    grid = np.linspace(lo, hi, points)
    prev_x: float | None = None
    prev_f: float | None = None
    for x in grid:
        try:
            f = func(float(x))
        except (DomainError, RangeError, CapabilityError):
            prev_x, prev_f = None, None
            continue
        if f == 0.0:
            return float(x), float(x), 0.0, 0.0
        if prev_f is not None and (prev_f < 0.0) != (f < 0.0):
            return prev_x, float(x), prev_f, f
        prev_x, prev_f = float(x), f
    return None


def solve_phasematched_pump(
    section: SectionSpec,
    kind: ProcessKind,
    lam_in: Wavelength,
    temp_C: float | None = None,
    window_nm: tuple[float, float] = PUMP_WINDOW_NM,
    scan_points: int = 257,
) -> Wavelength:
    """Pump wavelength at which the process is phase-matched.

    Scans the window for a sign change of delta_k(pump) and refines the
    lowest-wavelength root.  Raises :class:`NoSolutionError` naming the
    window when no sign change exists.
    """
    temp = section.temperature_C if temp_C is None else temp_C
    process = ProcessSpec.for_kind(kind, lam_in, Wavelength(window_nm[1]), section)

    def mismatch_at(pump_nm: float) -> float:
        return phase_mismatch(process, temp_C=temp, lam_pump=Wavelength(pump_nm))

    bracket = _scan_for_bracket(mismatch_at, window_nm[0], window_nm[1], scan_points)
    if bracket is None:
        raise NoSolutionError(
            f"no phase-matched pump for {kind.value} of {lam_in.nm} nm at "
            f"{temp} C inside window [{window_nm[0]}, {window_nm[1]}] nm"
        )
    lo, hi, f_lo, f_hi = bracket
    if lo == hi:
        return Wavelength(lo)
    return Wavelength(_bisect_root(mismatch_at, lo, hi, f_lo, f_hi))


@dataclass(frozen=True, eq=False)
class PhaseMatchMap:
    """Cached transfer matrices of both steps over a (T, pump) grid.

    Entries are sinc^2 transfers in [0, 1]; cells where a provider range
    was violated hold NaN (missing) rather than aborting the map.
    """

    temperature_C: np.ndarray
    pump_nm: np.ndarray
    step1: np.ndarray
    step2: np.ndarray

    def __post_init__(self):
        n_t, n_p = len(self.temperature_C), len(self.pump_nm)
        if self.step1.shape != (n_t, n_p) or self.step2.shape != (n_t, n_p):
            raise DomainError("map matrices must be shaped (len(T), len(pump))")


def _map_row(
    step1: SectionSpec,
    step2: SectionSpec,
    signal: Wavelength,
    temp: float,
    pumps: Sequence[float],
) -> tuple[np.ndarray, np.ndarray]:
    row1 = np.full(len(pumps), np.nan)
    row2 = np.full(len(pumps), np.nan)
    for j, pump_nm in enumerate(pumps):
        pump = Wavelength(pump_nm)
        try:
            p1 = ProcessSpec.dfg(signal, pump, step1)
            row1[j] = qpm_transfer(phase_mismatch(p1, temp_C=temp), step1.length_mm)
        except (DomainError, RangeError, CapabilityError):
            pass
        try:
            mid = dfg_target(signal, pump)
            p2 = ProcessSpec.dfg(mid, pump, step2)
            row2[j] = qpm_transfer(phase_mismatch(p2, temp_C=temp), step2.length_mm)
        except (DomainError, RangeError, CapabilityError):
            pass
    return row1, row2


def phasematch_map(
    step1: SectionSpec,
    step2: SectionSpec,
    signal: Wavelength,
    temperatures_C: Sequence[float],
    pumps_nm: Sequence[float],
    workers: int = 1,
) -> PhaseMatchMap:
    """Transfer of both steps over a temperature x pump grid.

    The row temperature applies to each section independently (one section
    heated at a time); the step-2 input at each cell is the step-1 DFG
    output at that cell's pump.  Rows may be evaluated concurrently; the
    assembled result is ordered and deterministic.
    """
    temps = np.asarray(list(temperatures_C), dtype=float)
    pumps = np.asarray(list(pumps_nm), dtype=float)
    if temps.size < 1 or pumps.size < 1:
        raise DomainError("map needs at least one temperature and one pump value")
    m1 = np.empty((temps.size, pumps.size))
    m2 = np.empty((temps.size, pumps.size))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(lambda t: _map_row(step1, step2, signal, t, pumps), temps)
            )
    else:
        rows = [_map_row(step1, step2, signal, t, pumps) for t in temps]
    for i, (row1, row2) in enumerate(rows):
        m1[i] = row1
        m2[i] = row2
    return PhaseMatchMap(temperature_C=temps, pump_nm=pumps, step1=m1, step2=m2)


@dataclass(frozen=True)
class TuningPoint:
    """One tuning-curve sample; ``target_nm`` is NaN when no root exists."""

    dT_C: float
    target_nm: float
    transfer: float


def step2_target_mismatch(
    step2: SectionSpec, intermediate: Wavelength, target_nm: float, temp_C: float
) -> float:
    """delta_k of step 2 versus its output wavelength at fixed input.

    The step-2 input is the intermediate wavelength pinned by the
    operating step-1 conditions; the pump that would produce the probed
    target is implied by energy conservation (1/pump = 1/in - 1/target),
    which requires target > intermediate.
    """
    target = Wavelength(target_nm)
    if target.nm <= intermediate.nm:
        raise DomainError(
            f"target ({target_nm} nm) must be longer than the step-2 input "
            f"({intermediate.nm} nm)"
        )
    pump = Wavelength(1.0 / (1.0 / intermediate.nm - 1.0 / target.nm))
    process = ProcessSpec.dfg(intermediate, pump, step2)
    return phase_mismatch(process, temp_C=temp_C)


def tuning_curve(
    step1: SectionSpec,
    step2: SectionSpec,
    signal: Wavelength,
    pump: Wavelength,
    dT_values: Sequence[float],
    window_nm: tuple[float, float] = TARGET_WINDOW_NM,
    scan_points: int = 181,
) -> list[TuningPoint]:
    """Phase-matched step-2 output versus second-section temperature offset.

    Section-1 conditions stay at the operating point, so the step-2 input
    is the fixed intermediate wavelength; per offset the root of
    :func:`step2_target_mismatch` over the target wavelength is solved
    inside the filter window (the pump implied per candidate target).
    When no root exists the point is marked missing (NaN).  ``transfer``
    is the step-2 transfer of the unmoved operating chain at the shifted
    temperature, i.e. the efficiency penalty of detuning without
    retuning.
    """
    mid = dfg_target(signal, pump)
    chain = ProcessSpec.dfg(mid, pump, step2)
    out: list[TuningPoint] = []
    for dT in dT_values:
        temp2 = step2.temperature_C + float(dT)

        def mismatch_at(target_nm: float, _t=temp2) -> float:
            return step2_target_mismatch(step2, mid, target_nm, _t)

        bracket = _scan_for_bracket(mismatch_at, window_nm[0], window_nm[1], scan_points)
        if bracket is None:
            target_nm = math.nan
        elif bracket[0] == bracket[1]:
            target_nm = bracket[0]
        else:
            target_nm = _bisect_root(mismatch_at, *bracket)
        transfer = qpm_transfer(phase_mismatch(chain, temp_C=temp2), step2.length_mm)
        out.append(TuningPoint(dT_C=float(dT), target_nm=target_nm, transfer=transfer))
    return out


def degenerate_operating_point(
    step1: SectionSpec,
    step2: SectionSpec,
    signal: Wavelength,
    t_window: tuple[float, float],
    pump_window: tuple[float, float] = PUMP_WINDOW_NM,
    grid: int = 41,
    zoom_levels: int = 4,
) -> tuple[float, float, float, float]:
    """Common (T, pump) where both steps convert simultaneously.

    Maximizes min(step1, step2) transfer by a deterministic coarse scan
    followed by grid zoom.  Returns (T_C, pump_nm, transfer1, transfer2).
    """
    t_lo, t_hi = t_window
    p_lo, p_hi = pump_window
    best = (t_lo, p_lo, -1.0, 0.0, 0.0)
    for _ in range(zoom_levels):
        pm = phasematch_map(
            step1, step2, signal, np.linspace(t_lo, t_hi, grid), np.linspace(p_lo, p_hi, grid)
        )
        score = np.fmin(pm.step1, pm.step2)
        score_flat = np.where(np.isnan(score), -1.0, score).ravel()
        idx = int(np.argmax(score_flat))
        i, j = divmod(idx, grid)
        t_best, p_best = float(pm.temperature_C[i]), float(pm.pump_nm[j])
        best = (t_best, p_best, score_flat[idx], float(pm.step1[i, j]), float(pm.step2[i, j]))
        t_half = 1.5 * (t_hi - t_lo) / (grid - 1)
        p_half = 1.5 * (p_hi - p_lo) / (grid - 1)
        t_lo, t_hi = t_best - t_half, t_best + t_half
        p_lo, p_hi = p_best - p_half, p_best + p_half
    if best[2] < 0.0:
        raise NoSolutionError("no cell of the scan evaluated successfully")
    return best[0], best[1], best[3], best[4]
