"""Undepleted-pump conversion efficiency, loss budgets, noise accounting
and broadband spectrum conversion.

The single-step efficiency is the standard undepleted-pump closed form
with detuning,

    eta = eta_max * kappa^2/(kappa^2 + (dk/2)^2)
                  * sin^2( sqrt(kappa^2 + (dk/2)^2) * L ),

with kappa^2 = eta_nor * P_pump.  At dk = 0 this reduces to
eta_max * sin^2(sqrt(eta_nor*P)*L); in the small-signal limit it reduces
to eta_nor * P * L^2 * sinc^2(dk*L/2).  The cascade efficiency is the
product of the two step efficiencies at the shared pump power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError

# --- step and cascade efficiency -------------------------------------------


@dataclass(frozen=True)
class StepEfficiencyModel:
    """Saturating conversion law of one step.

    ``eta_nor_per_W_mm2`` is the normalized efficiency (per watt per
    millimeter squared), ``length_mm`` the interaction length and
    ``eta_max`` an optional saturation ceiling.
    """

    eta_nor_per_W_mm2: float
    length_mm: float
    eta_max: float = 1.0

    def __post_init__(self):
        if self.eta_nor_per_W_mm2 < 0:
            raise DomainError("eta_nor must be non-negative")
        if not self.length_mm > 0:
            raise DomainError("length must be positive")
        if not 0.0 < self.eta_max <= 1.0:
            raise DomainError("eta_max must be in (0, 1]")


def step_efficiency(model: StepEfficiencyModel, pump_W: float, delta_k_per_mm: float = 0.0) -> float:
    """Internal conversion efficiency of one step at the given pump power."""
    if pump_W < 0:
        raise DomainError("pump power must be non-negative")
    kappa2 = model.eta_nor_per_W_mm2 * pump_W
    if kappa2 == 0.0:
        return 0.0
    half_dk = 0.5 * delta_k_per_mm
    total = kappa2 + half_dk * half_dk
    return float(
        model.eta_max * (kappa2 / total) * math.sin(math.sqrt(total) * model.length_mm) ** 2
    )


def cascade_efficiency(
    step1: StepEfficiencyModel,
    step2: StepEfficiencyModel,
    pump_W: float,
    delta_k1_per_mm: float = 0.0,
    delta_k2_per_mm: float = 0.0,
) -> float:
    """Two-step efficiency: the product of both steps at the shared pump."""
    return step_efficiency(step1, pump_W, delta_k1_per_mm) * step_efficiency(
        step2, pump_W, delta_k2_per_mm
    )


# --- loss budget ------------------------------------------------------------


@dataclass(frozen=True)
class LossBudget:
    """Ordered multiplicative transmission ledger, one entry per element."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        checked = []
        for label, transmission in self.entries:
            t = float(transmission)
            if not 0.0 < t <= 1.0:
                raise DomainError(
                    f"budget entry {label!r}: transmission {transmission!r} outside (0, 1]"
                )
            checked.append((str(label), t))
        object.__setattr__(self, "entries", tuple(checked))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, float]]) -> "LossBudget":
        return cls(entries=tuple(pairs))


def budget_transmission(budget: LossBudget) -> float:
    """Product of all entry transmissions; 1.0 for an empty budget."""
    total = 1.0
    for _, t in budget.entries:
        total *= t
    return total


def budget_loss(budget: LossBudget) -> float:
    return 1.0 - budget_transmission(budget)


def external_from_internal(eta_internal: float, budget: LossBudget) -> float:
    """External efficiency after all out-coupling and filter losses."""
    if not 0.0 <= eta_internal <= 1.0:
        raise DomainError("internal efficiency must be in [0, 1]")
    return eta_internal * budget_transmission(budget)


def internal_from_external(eta_external: float, budget: LossBudget) -> float:
    """Inverse of :func:`external_from_internal`."""
    if eta_external < 0.0:
        raise DomainError("external efficiency must be non-negative")
    return eta_external / budget_transmission(budget)


# --- noise accounting --------------------------------------------------------


@dataclass(frozen=True)
class NoiseCounts:
    """Raw detector-side count figures of a noise measurement."""

    total_cps: float
    dark_cps: float
    detector_efficiency: float
    bandwidth_GHz: float
    external_transmission: float

    def __post_init__(self):
        if self.dark_cps < 0 or self.total_cps < self.dark_cps:
            raise DomainError("need total_cps >= dark_cps >= 0")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise DomainError("detector efficiency must be in (0, 1]")
        if not self.bandwidth_GHz > 0:
            raise DomainError("bandwidth must be positive")
        if not 0.0 < self.external_transmission <= 1.0:
            raise DomainError("external transmission must be in (0, 1]")


@dataclass(frozen=True)
class NoiseReport:
    """Pump-induced rate and noise spectral densities derived from counts."""

    pump_induced_cps: float
    external_nsd_cps_per_GHz: float
    internal_nsd_cps_per_GHz: float


def noise_report(counts: NoiseCounts) -> NoiseReport:
    """Convert raw counts to pump-induced rate and external/internal NSD.

    pump_induced = (total - dark) / detector_efficiency;
    external NSD = pump_induced / bandwidth;
    internal NSD = external NSD / external_transmission.
    """
    pump_induced = (counts.total_cps - counts.dark_cps) / counts.detector_efficiency
    external = pump_induced / counts.bandwidth_GHz
    internal = external / counts.external_transmission
    return NoiseReport(
        pump_induced_cps=pump_induced,
        external_nsd_cps_per_GHz=external,
        internal_nsd_cps_per_GHz=internal,
    )


def noise_report_to_dict(report: NoiseReport, counts: NoiseCounts) -> dict:
    """JSON-ready report with the input echoed back."""
    return {
        "pump_induced_cps": report.pump_induced_cps,
        "external_nsd_cps_per_GHz": report.external_nsd_cps_per_GHz,
        "internal_nsd_cps_per_GHz": report.internal_nsd_cps_per_GHz,
        "inputs": {
            "total_cps": counts.total_cps,
            "dark_cps": counts.dark_cps,
            "detector_efficiency": counts.detector_efficiency,
            "bandwidth_GHz": counts.bandwidth_GHz,
            "external_transmission": counts.external_transmission,
        },
    }


# --- spectra ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sampled intensity versus vacuum wavelength (nm, arbitrary linear units).

    Wavelengths must be strictly increasing; intensities non-negative and
    finite.
    """

    wavelength_nm: np.ndarray
    intensity: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.wavelength_nm, dtype=float)
        inten = np.asarray(self.intensity, dtype=float)
        if lam.ndim != 1 or lam.shape != inten.shape or lam.size == 0:
            raise DomainError("spectrum needs matching 1-D wavelength and intensity arrays")
        if not np.all(np.diff(lam) > 0):
            raise DomainError("spectrum wavelengths must be strictly increasing")
        if not (np.all(np.isfinite(inten)) and np.all(inten >= 0)):
            raise DomainError("spectrum intensities must be finite and non-negative")
        object.__setattr__(self, "wavelength_nm", lam)
        object.__setattr__(self, "intensity", inten)

    def __len__(self):
        return self.wavelength_nm.size

    def interpolate(self, lam_nm: float) -> float:
        """Linear interpolation between samples; zero outside the span."""
        return float(
            np.interp(lam_nm, self.wavelength_nm, self.intensity, left=0.0, right=0.0)
        )

    def to_csv(self, path: str | Path, header_lines: Sequence[str] = ()) -> None:
        lines = [f"# {h}" for h in header_lines]
        lines.append("wavelength_nm,intensity")
        lines.extend(
            f"{float(lam)!r},{float(val)!r}" for lam, val in zip(self.wavelength_nm, self.intensity)
        )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path) -> "Spectrum":
        lams: list[float] = []
        vals: list[float] = []
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.lower().replace(" ", "") == "wavelength_nm,intensity":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DomainError(f"bad spectrum row: {raw!r}")
            lams.append(float(parts[0]))
            vals.append(float(parts[1]))
        return cls(wavelength_nm=np.array(lams), intensity=np.array(vals))


def convert_spectrum(
    spectrum: Spectrum,
    transfer: Callable[[float], float],
    map_wavelength: Callable[[float], float] | None = None,
) -> tuple[Spectrum, int]:
    """Push a spectrum through a device transfer curve.

    Output intensity is input intensity times ``transfer`` evaluated at the
    input wavelength; the output abscissa is ``map_wavelength`` of each
    input sample (identity when omitted) and must stay monotonic.  Samples
    where the transfer raises or returns a non-finite value are dropped;
    the second return value counts them.
    """
    out_lam: list[float] = []
    out_val: list[float] = []
    dropped = 0
    for lam, val in zip(spectrum.wavelength_nm, spectrum.intensity):
        try:
            eta = transfer(float(lam))
            mapped = map_wavelength(float(lam)) if map_wavelength else float(lam)
        except DomainError:
            dropped += 1
            continue
        if not (math.isfinite(eta) and math.isfinite(mapped)):
            dropped += 1
            continue
        out_lam.append(mapped)
        out_val.append(val * eta)
    if not out_lam:
        raise DomainError("no spectrum samples survived the transfer")
    return Spectrum(wavelength_nm=np.array(out_lam), intensity=np.array(out_val)), dropped


def spectrum_fwhm(spectrum: Spectrum) -> float:
    """Full width at half maximum by linear interpolation of the crossings."""
    lam = spectrum.wavelength_nm
    inten = spectrum.intensity
    peak_idx = int(np.argmax(inten))
    half = inten[peak_idx] / 2.0
    if inten[peak_idx] <= 0:
        raise DomainError("spectrum has no positive peak")

    def crossing(idx_range) -> float:
        prev = None
        for i in idx_range:
            if prev is not None:
                a, b = inten[prev], inten[i]
                if (a - half) * (b - half) <= 0 and a != b:
                    frac = (half - a) / (b - a)
                    return float(lam[prev] + frac * (lam[i] - lam[prev]))
            prev = i
        raise DomainError("half-maximum crossing not inside the sampled span")

    left = crossing(range(peak_idx, -1, -1))
    right = crossing(range(peak_idx, len(lam)))
    return abs(right - left)
