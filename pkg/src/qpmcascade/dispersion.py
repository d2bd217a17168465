"""Temperature-dependent refractive-index models and effective-index providers.

Materials are described by data files (JSON) holding a named coefficient
table together with the identifier of the temperature-dependence functional
form.  Two published forms are built in:

``jundt1997``
    n^2 = a1 + b1*f + (a2 + b2*f)/(lam^2 - (a3 + b3*f)^2)
        + (a4 + b4*f)/(lam^2 - a5^2) - a6*lam^2,
    with f = (T - 24.5)*(T + 570.82), lam in micrometers, T in Celsius.
    This is the classic form used for the extraordinary index of congruent
    lithium niobate (Jundt, Opt. Lett. 22, 1553 (1997)).

``kelvin2_pole``
    n^2 = A + (B + bT*K^2)/(lam^2 - (C + cT*K^2)^2) + E/(lam^2 - F^2)
        + D*lam^2,  with K = T + 273.15.
    A single-pole temperature dependence parameterized in absolute
    temperature squared, as used for temperature-dependent lithium
    tantalate Sellmeier fits (e.g. JJAP 52, 032601 (2013)).

``constant``
    n^2 = n2 exactly; a synthetic form for tests and toy media.

The module also defines the effective-index provider abstraction: a
provider maps (wavelength, temperature, transverse mode number) to one
refractive index.  Bulk and offset-corrected providers live here; the
mode-solver-backed provider is in :mod:`qpmcascade.modesolver`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Mapping

from .errors import CapabilityError, MaterialFileError, NumericError, RangeError
from .spectral import Wavelength


def _n2_jundt1997(coeff: Mapping[str, float], lam_um: float, temp_C: float) -> float:
    f = (temp_C - 24.5) * (temp_C + 570.82)
    lam2 = lam_um * lam_um
    return (
        coeff["a1"]
        + coeff["b1"] * f
        + (coeff["a2"] + coeff["b2"] * f) / (lam2 - (coeff["a3"] + coeff["b3"] * f) ** 2)
        + (coeff["a4"] + coeff["b4"] * f) / (lam2 - coeff["a5"] ** 2)
        - coeff["a6"] * lam2
    )


def _n2_kelvin2_pole(coeff: Mapping[str, float], lam_um: float, temp_C: float) -> float:
    k2 = (temp_C + 273.15) ** 2
    lam2 = lam_um * lam_um
    return (
        coeff["A"]
        + (coeff["B"] + coeff["bT"] * k2) / (lam2 - (coeff["C"] + coeff["cT"] * k2) ** 2)
        + coeff["E"] / (lam2 - coeff["F"] ** 2)
        + coeff["D"] * lam2
    )


def _n2_constant(coeff: Mapping[str, float], lam_um: float, temp_C: float) -> float:
    return coeff["n2"]


TEMPERATURE_FORMS: Mapping[str, Callable[[Mapping[str, float], float, float], float]] = {
    "jundt1997": _n2_jundt1997,
    "kelvin2_pole": _n2_kelvin2_pole,
    "constant": _n2_constant,
}

_FORM_KEYS = {
    "jundt1997": {"a1", "a2", "a3", "a4", "a5", "a6", "b1", "b2", "b3", "b4"},
    "kelvin2_pole": {"A", "B", "C", "D", "E", "F", "bT", "cT"},
    "constant": {"n2"},
}


@dataclass(frozen=True)
class SellmeierModel:
    """A named dispersion model n(lam, T) with declared validity ranges.

    ``coefficients`` is immutable after construction.  ``mid_ir_absorptive``
    is a qualitative flag consumed by the noise model: it marks materials
    that absorb mid-infrared light strongly enough that they do not
    transmit thermal seed photons.
    """

    name: str
    polarization: str
    temperature_form: str
    coefficients: Mapping[str, float]
    wavelength_range_um: tuple[float, float]
    temperature_range_C: tuple[float, float]
    mid_ir_absorptive: bool = False
    notes: str = ""

    def __post_init__(self):
        if self.temperature_form not in TEMPERATURE_FORMS:
            raise MaterialFileError(
                f"unknown temperature_form {self.temperature_form!r}; "
                f"known forms: {sorted(TEMPERATURE_FORMS)}"
            )
        missing = _FORM_KEYS[self.temperature_form] - set(self.coefficients)
        if missing:
            raise MaterialFileError(
                f"material {self.name!r}: temperature_form {self.temperature_form!r} "
                f"requires coefficients {sorted(missing)}"
            )
        object.__setattr__(
            self, "coefficients", MappingProxyType(dict(self.coefficients))
        )
        object.__setattr__(self, "wavelength_range_um", tuple(self.wavelength_range_um))
        object.__setattr__(self, "temperature_range_C", tuple(self.temperature_range_C))

    def index_unchecked(self, lam_um: float, temp_C: float) -> float:
        """Evaluate the raw formula without range validation (used for
        finite-difference probes a hair outside the declared ranges)."""
        n2 = TEMPERATURE_FORMS[self.temperature_form](self.coefficients, lam_um, temp_C)
        if not (n2 > 0.0 and math.isfinite(n2)):
            raise NumericError(
                f"material {self.name!r}: n^2 = {n2!r} at lam={lam_um} um, T={temp_C} C"
            )
        return math.sqrt(n2)


def sellmeier_index(model: SellmeierModel, lam: Wavelength, temp_C: float) -> float:
    """Refractive index at (lam, T), validated against the declared ranges.

    Raises :class:`RangeError` naming the violated bound, and
    :class:`NumericError` if the formula yields an index outside (1, 4),
    which indicates a broken coefficient table.
    """
    lam_um = lam.um
    lo, hi = model.wavelength_range_um
    if not (lo <= lam_um <= hi):
        raise RangeError(f"{model.name} wavelength_um", lam_um, lo, hi)
    tlo, thi = model.temperature_range_C
    if not (tlo <= temp_C <= thi):
        raise RangeError(f"{model.name} temperature_C", temp_C, tlo, thi)
    n = model.index_unchecked(lam_um, temp_C)
    if not (1.0 < n < 4.0):
        raise NumericError(
            f"material {model.name!r}: index {n} outside (1, 4) at "
            f"lam={lam_um} um, T={temp_C} C"
        )
    return n


def group_and_phase_terms(
    model: SellmeierModel, lam: Wavelength, temp_C: float, rel_step: float = 1e-6
) -> dict[str, float]:
    """Index and first derivatives {n, dn_dlam_per_nm, dn_dT_per_C}.

    Derivatives are central finite differences with relative step
    ``rel_step``; probe points may overhang the declared range edges by
    that hair, the formula itself is smooth there.
    """
    n = sellmeier_index(model, lam, temp_C)
    lam_um = lam.um
    h_lam = lam_um * rel_step
    dn_dlam_um = (
        model.index_unchecked(lam_um + h_lam, temp_C)
        - model.index_unchecked(lam_um - h_lam, temp_C)
    ) / (2.0 * h_lam)
    h_t = max(abs(temp_C), 1.0) * rel_step
    dn_dt = (
        model.index_unchecked(lam_um, temp_C + h_t)
        - model.index_unchecked(lam_um, temp_C - h_t)
    ) / (2.0 * h_t)
    return {"n": n, "dn_dlam_per_nm": dn_dlam_um * 1e-3, "dn_dT_per_C": dn_dt}


class BulkIndexProvider:
    """Effective index approximated by the bulk material index.

    Supports the fundamental transverse mode only; geometric dispersion of
    the guided structure is ignored.
    """

    kind = "bulk"

    def __init__(self, model: SellmeierModel):
        self.model = model

    def effective_index(self, lam: Wavelength, temp_C: float, mode: int = 1) -> float:
        if mode != 1:
            raise CapabilityError(
                f"{type(self).__name__} supports mode 1 only, got mode {mode}"
            )
        return sellmeier_index(self.model, lam, temp_C)

    def __repr__(self):
        return f"BulkIndexProvider({self.model.name!r})"


class OffsetIndexProvider:
    """Bulk index plus a constant additive correction.

    The offset ``delta_n`` is a free parameter meant to absorb systematic
    deviations between bulk and guided-mode indices (geometry, doping).
    """

    kind = "offset"

    def __init__(self, model: SellmeierModel, delta_n: float):
        self.model = model
        self.delta_n = float(delta_n)

    def effective_index(self, lam: Wavelength, temp_C: float, mode: int = 1) -> float:
        if mode != 1:
            raise CapabilityError(
                f"{type(self).__name__} supports mode 1 only, got mode {mode}"
            )
        return sellmeier_index(self.model, lam, temp_C) + self.delta_n

    def __repr__(self):
        return f"OffsetIndexProvider({self.model.name!r}, delta_n={self.delta_n!r})"


def effective_index(provider, lam: Wavelength, temp_C: float, mode: int = 1) -> float:
    """Evaluate any index provider; see the provider classes for semantics."""
    return provider.effective_index(lam, temp_C, mode=mode)


# --- material file I/O ----------------------------------------------------

_REQUIRED_FILE_KEYS = (
    "name",
    "polarization",
    "temperature_form",
    "coefficients",
    "wavelength_range_um",
    "temperature_range_C",
)
_OPTIONAL_FILE_KEYS = ("mid_ir_absorptive", "notes")


def material_from_dict(doc: dict) -> SellmeierModel:
    if not isinstance(doc, dict):
        raise MaterialFileError(f"material document must be an object, got {type(doc).__name__}")
    unknown = set(doc) - set(_REQUIRED_FILE_KEYS) - set(_OPTIONAL_FILE_KEYS)
    if unknown:
        raise MaterialFileError(f"unknown material file key(s): {sorted(unknown)}")
    missing = set(_REQUIRED_FILE_KEYS) - set(doc)
    if missing:
        raise MaterialFileError(f"missing material file key(s): {sorted(missing)}")
    coeff = doc["coefficients"]
    if not isinstance(coeff, dict) or not all(
        isinstance(v, (int, float)) for v in coeff.values()
    ):
        raise MaterialFileError("coefficients must be an object of numbers")
    for key in ("wavelength_range_um", "temperature_range_C"):
        rng = doc[key]
        if not (isinstance(rng, list) and len(rng) == 2 and rng[0] < rng[1]):
            raise MaterialFileError(f"{key} must be a [low, high] pair with low < high")
    return SellmeierModel(
        name=doc["name"],
        polarization=doc["polarization"],
        temperature_form=doc["temperature_form"],
        coefficients={k: float(v) for k, v in coeff.items()},
        wavelength_range_um=(float(doc["wavelength_range_um"][0]), float(doc["wavelength_range_um"][1])),
        temperature_range_C=(float(doc["temperature_range_C"][0]), float(doc["temperature_range_C"][1])),
        mid_ir_absorptive=bool(doc.get("mid_ir_absorptive", False)),
        notes=str(doc.get("notes", "")),
    )


def material_to_json(model: SellmeierModel) -> str:
    """Canonical serialization: fixed key order, sorted coefficients,
    two-space indent, trailing newline.  Loading then re-emitting a
    canonical file is byte-identical."""
    doc = {
        "name": model.name,
        "polarization": model.polarization,
        "temperature_form": model.temperature_form,
        "coefficients": {k: model.coefficients[k] for k in sorted(model.coefficients)},
        "wavelength_range_um": list(model.wavelength_range_um),
        "temperature_range_C": list(model.temperature_range_C),
        "mid_ir_absorptive": model.mid_ir_absorptive,
        "notes": model.notes,
    }
    return json.dumps(doc, indent=2) + "\n"


def load_material(path: str | Path) -> SellmeierModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MaterialFileError(f"{path}: invalid JSON: {exc}") from exc
    return material_from_dict(doc)


def save_material(model: SellmeierModel, path: str | Path) -> None:
    Path(path).write_text(material_to_json(model), encoding="utf-8")


def builtin_material_names() -> list[str]:
    root = resources.files("qpmcascade").joinpath("materials")
    return sorted(p.name.removesuffix(".json") for p in root.iterdir() if p.name.endswith(".json"))


def builtin_material(name: str) -> SellmeierModel:
    """Load a material shipped with the package, e.g. ``lithium_niobate_e``."""
    ref = resources.files("qpmcascade").joinpath("materials").joinpath(f"{name}.json")
    if not ref.is_file():
        raise MaterialFileError(
            f"no built-in material {name!r}; available: {builtin_material_names()}"
        )
    return material_from_dict(json.loads(ref.read_text(encoding="utf-8")))
