"""Device files: the two-section waveguide plus its couplings and losses.

A device file is a JSON document:

    {
      "materials": ["builtin:lithium_niobate_e", "path/to/material.json"],
      "signal_nm": 637.2,            // optional if step1 carries solve_at
      "pump_nm": 2152.9,             // optional if step1 carries solve_at
      "sections": [
        {"role": "step1", "length_mm": 20.0, "qpm_order": 1,
         "temperature_C": 59.26,
         "solve_at": {"pump_nm": 2152.9, "T_C": 59.26, "signal_nm": 637.2},
         "index_provider": {"kind": "bulk", "material": "lithium_niobate_e"}},
        {"role": "step2", ...}
      ],
      "coupling": {"pump": 0.745, "signal": 0.882, "aux": 0.818},
      "loss_budget": [{"label": "out_coupling", "transmission": 0.922}, ...],
      "geometry": { ... }            // optional waveguide cross-section
    }

Each section states either an explicit ``poling_period_um`` or a
``solve_at`` operating point at which the period is solved on load; never
both.  Unknown keys are rejected with a named error.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from .conversion import LossBudget
from .dispersion import (
    BulkIndexProvider,
    OffsetIndexProvider,
    SellmeierModel,
    builtin_material,
    load_material,
)
from .errors import DeviceFileError
from .modesolver import ModeSolverIndexProvider, WaveguideGeometry
from .qpm import (
    ProcessSpec,
    SectionSpec,
    phase_mismatch,
    qpm_transfer,
    solve_poling_period,
)
from .spectral import ProcessKind, Wavelength, dfg_target


def _check_keys(doc: dict, required: set[str], optional: set[str], where: str) -> None:
    unknown = set(doc) - required - optional
    if unknown:
        raise DeviceFileError(f"unknown key(s) {sorted(unknown)} in {where}")
    missing = required - set(doc)
    if missing:
        raise DeviceFileError(f"missing key(s) {sorted(missing)} in {where}")


@dataclass(frozen=True, eq=False)
class TwoStepDevice:
    """The assembled two-section converter with its external couplings."""

    step1: SectionSpec
    step2: SectionSpec
    signal: Wavelength
    pump: Wavelength
    coupling: Mapping[str, float]
    loss_budget: LossBudget
    materials: Mapping[str, SellmeierModel]
    geometry: WaveguideGeometry | None = None
    source_sha256: str = ""

    @property
    def intermediate(self) -> Wavelength:
        """Step-1 output wavelength at the operating pump."""
        return dfg_target(self.signal, self.pump)

    @property
    def target(self) -> Wavelength:
        """Step-2 output wavelength at the operating pump."""
        return dfg_target(self.intermediate, self.pump)

    def step1_process(self, pump: Wavelength | None = None) -> ProcessSpec:
        return ProcessSpec.dfg(self.signal, pump or self.pump, self.step1)

    def step2_process(self, pump: Wavelength | None = None) -> ProcessSpec:
        p = pump or self.pump
        return ProcessSpec.dfg(dfg_target(self.signal, p), p, self.step2)

    def cascade_transfer(
        self,
        temp1_C: float | None = None,
        temp2_C: float | None = None,
    ) -> Callable[[float], float]:
        """Normalized two-step transfer versus input wavelength (nm).

        Domain/range errors of the dispersion providers propagate, which
        lets spectrum conversion drop unmappable samples.
        """

        def transfer(lam_in_nm: float) -> float:
            lam_in = Wavelength(lam_in_nm)
            p1 = ProcessSpec.dfg(lam_in, self.pump, self.step1)
            t1 = qpm_transfer(phase_mismatch(p1, temp_C=temp1_C), self.step1.length_mm)
            mid = dfg_target(lam_in, self.pump)
            p2 = ProcessSpec.dfg(mid, self.pump, self.step2)
            t2 = qpm_transfer(phase_mismatch(p2, temp_C=temp2_C), self.step2.length_mm)
            return t1 * t2

        return transfer

    def map_to_target(self, lam_in_nm: float) -> float:
        """Input wavelength mapped through both DFG steps, in nm."""
        return dfg_target(dfg_target(Wavelength(lam_in_nm), self.pump), self.pump).nm


def _load_materials(entries: list, base_dir: Path) -> dict[str, SellmeierModel]:
    if not isinstance(entries, list) or not entries:
        raise DeviceFileError("materials must be a non-empty list")
    loaded: dict[str, SellmeierModel] = {}
    for entry in entries:
        if not isinstance(entry, str):
            raise DeviceFileError(f"material entry must be a string, got {entry!r}")
        if entry.startswith("builtin:"):
            model = builtin_material(entry.removeprefix("builtin:"))
        else:
            model = load_material((base_dir / entry).resolve())
        loaded[model.name] = model
    return loaded


def _material_for(name, materials: Mapping[str, SellmeierModel], where: str) -> SellmeierModel:
    if name is None:
        raise DeviceFileError(f"{where} needs a material name; loaded: {sorted(materials)}")
    if name not in materials:
        raise DeviceFileError(
            f"{where} references material {name!r}; loaded: {sorted(materials)}"
        )
    return materials[name]


def _build_geometry(doc: dict, materials: Mapping[str, SellmeierModel]) -> WaveguideGeometry:
    _check_keys(
        doc,
        required={"core_width_um", "core_height_um", "core_material", "substrate_material"},
        optional={"superstrate_index", "grid_nx", "grid_ny", "window_width_um", "window_height_um"},
        where="geometry",
    )
    return WaveguideGeometry(
        core_width_um=float(doc["core_width_um"]),
        core_height_um=float(doc["core_height_um"]),
        core_material=_material_for(doc["core_material"], materials, "geometry.core_material"),
        substrate_material=_material_for(
            doc["substrate_material"], materials, "geometry.substrate_material"
        ),
        superstrate_index=float(doc.get("superstrate_index", 1.0)),
        grid_nx=int(doc.get("grid_nx", 64)),
        grid_ny=int(doc.get("grid_ny", 64)),
        window_width_um=float(doc.get("window_width_um", 30.0)),
        window_height_um=float(doc.get("window_height_um", 24.0)),
    )


def _build_provider(doc: dict, materials, geometry: WaveguideGeometry | None, where: str):
    _check_keys(doc, required={"kind"}, optional={"material", "delta_n", "mode"}, where=where)
    kind = doc["kind"]
    if kind == "bulk":
        return BulkIndexProvider(_material_for(doc.get("material"), materials, where))
    if kind == "offset":
        return OffsetIndexProvider(
            _material_for(doc.get("material"), materials, where),
            delta_n=float(doc.get("delta_n", 0.0)),
        )
    if kind == "modesolver":
        if geometry is None:
            raise DeviceFileError(f"{where}: modesolver provider needs a geometry block")
        return ModeSolverIndexProvider(geometry, default_mode=int(doc.get("mode", 1)))
    raise DeviceFileError(f"{where}: unknown index_provider kind {kind!r}")


def _build_section(doc: dict, materials, geometry, where: str) -> tuple[SectionSpec, dict | None]:
    _check_keys(
        doc,
        required={"role", "length_mm", "temperature_C", "index_provider"},
        optional={"poling_period_um", "solve_at", "qpm_order", "expansion_per_C", "expansion_ref_C"},
        where=where,
    )
    has_period = "poling_period_um" in doc
    has_solve = "solve_at" in doc
    if has_period == has_solve:
        raise DeviceFileError(
            f"{where}: exactly one of poling_period_um and solve_at is required"
        )
    provider = _build_provider(doc["index_provider"], materials, geometry, f"{where}.index_provider")
    qpm_order = int(doc.get("qpm_order", 1))
    solve_at = None
    if has_solve:
        solve_doc = doc["solve_at"]
        _check_keys(
            solve_doc, required={"pump_nm", "T_C", "signal_nm"}, optional=set(), where=f"{where}.solve_at"
        )
        solve_at = solve_doc
        period = solve_poling_period(
            ProcessKind.DFG,
            Wavelength(float(solve_doc["signal_nm"])),
            Wavelength(float(solve_doc["pump_nm"])),
            float(solve_doc["T_C"]),
            provider,
            qpm_order=qpm_order,
        )
    else:
        period = float(doc["poling_period_um"])
    section = SectionSpec(
        role=doc["role"],
        length_mm=float(doc["length_mm"]),
        poling_period_um=period,
        temperature_C=float(doc["temperature_C"]),
        index_provider=provider,
        qpm_order=qpm_order,
        expansion_per_C=float(doc.get("expansion_per_C", 0.0)),
        expansion_ref_C=float(doc.get("expansion_ref_C", 25.0)),
    )
    return section, solve_at


def device_from_dict(doc: dict, base_dir: Path, sha256: str = "") -> TwoStepDevice:
    _check_keys(
        doc,
        required={"materials", "sections", "coupling", "loss_budget"},
        optional={"signal_nm", "pump_nm", "geometry"},
        where="device",
    )
    materials = _load_materials(doc["materials"], base_dir)
    geometry = _build_geometry(doc["geometry"], materials) if "geometry" in doc else None
    sections = doc["sections"]
    if not isinstance(sections, list) or len(sections) != 2:
        raise DeviceFileError("sections must list exactly one step1 and one step2")
    built: dict[str, tuple[SectionSpec, dict | None]] = {}
    for i, sec_doc in enumerate(sections):
        section, solve_at = _build_section(sec_doc, materials, geometry, f"sections[{i}]")
        if section.role in built:
            raise DeviceFileError(f"duplicate section role {section.role!r}")
        built[section.role] = (section, solve_at)
    if set(built) != {"step1", "step2"}:
        raise DeviceFileError("sections must list exactly one step1 and one step2")
    step1, solve1 = built["step1"]
    step2, _ = built["step2"]

    signal_nm = doc.get("signal_nm")
    pump_nm = doc.get("pump_nm")
    if solve1 is not None:
        if signal_nm is None:
            signal_nm = solve1["signal_nm"]
        elif float(signal_nm) != float(solve1["signal_nm"]):
            raise DeviceFileError("signal_nm disagrees with step1 solve_at signal_nm")
        if pump_nm is None:
            pump_nm = solve1["pump_nm"]
        elif float(pump_nm) != float(solve1["pump_nm"]):
            raise DeviceFileError("pump_nm disagrees with step1 solve_at pump_nm")
    if signal_nm is None or pump_nm is None:
        raise DeviceFileError(
            "device needs signal_nm and pump_nm (top-level or via step1 solve_at)"
        )

    coupling_doc = doc["coupling"]
    _check_keys(coupling_doc, required={"pump", "signal", "aux"}, optional=set(), where="coupling")
    coupling = {}
    for key, value in coupling_doc.items():
        v = float(value)
        if not 0.0 < v <= 1.0:
            raise DeviceFileError(f"coupling.{key} = {value!r} outside (0, 1]")
        coupling[key] = v

    budget_doc = doc["loss_budget"]
    if not isinstance(budget_doc, list):
        raise DeviceFileError("loss_budget must be a list of {label, transmission}")
    pairs = []
    for i, item in enumerate(budget_doc):
        _check_keys(item, required={"label", "transmission"}, optional=set(), where=f"loss_budget[{i}]")
        pairs.append((item["label"], float(item["transmission"])))

    return TwoStepDevice(
        step1=step1,
        step2=step2,
        signal=Wavelength(float(signal_nm)),
        pump=Wavelength(float(pump_nm)),
        coupling=coupling,
        loss_budget=LossBudget.from_pairs(pairs),
        materials=materials,
        geometry=geometry,
        source_sha256=sha256,
    )


def load_device(path: str | Path) -> TwoStepDevice:
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DeviceFileError(f"{path}: invalid JSON: {exc}") from exc
    return device_from_dict(doc, path.parent, sha256=hashlib.sha256(raw).hexdigest())


def reference_device_path() -> Path:
    """Path of the device file shipped with the package."""
    return Path(__file__).parent / "devices" / "reference_device.json"
