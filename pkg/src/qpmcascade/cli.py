"""Command-line front end.

Subcommands bind device, material and data files to the library and emit
CSV/JSON artifacts.  All numeric output is deterministic for fixed inputs;
every artifact starts with a provenance header (tool version, device file
hash, command line) whose timestamp line is the only run-dependent part.
Artifacts are written atomically (temp file + rename), so a failing run
never leaves a partial file.

Exit codes: 0 success, 2 usage error, 3 domain/range/file error (with a
single machine-parseable line ``code=<code>, msg=<text>`` on stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
import tempfile
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .conversion import (
    NoiseCounts,
    Spectrum,
    StepEfficiencyModel,
    budget_transmission,
    cascade_efficiency,
    convert_spectrum,
    noise_report,
    noise_report_to_dict,
    step_efficiency,
)
from .device import TwoStepDevice, load_device
from .errors import ConverterError, DomainError
from .fitting import auto_initial, fit, goodness, registry_model
from .modesolver import ModeShortfallWarning, field_to_csv_rows, solve_modes
from .noisemodel import (
    enumerate_parasitics,
    lineshape_analytic,
    thermal_sfg_lineshape,
    thermal_sfg_mismatch,
)
from .qpm import phasematch_map, tuning_curve
from .spectral import Wavelength


def _range_spec(text: str) -> np.ndarray:
    """Parse 'lo:hi:count' into an inclusive linspace."""
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected lo:hi:count with count >= 1, got {text!r}"
        ) from None
    return np.linspace(lo, hi, count)


def _assignments(text: str) -> dict[str, float]:
    """Parse 'name=value,name=value' pairs."""
    out: dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise argparse.ArgumentTypeError(f"expected name=value, got {item!r}")
        name, value = item.split("=", 1)
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad numeric value in {item!r}") from None
    return out


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance_lines(subcommand: str, argv: list[str], device_sha: str = "") -> list[str]:
    lines = [
        f"qpmcascade {subcommand} v{__version__}",
        f"command: qpmcascade {shlex.join(argv)}",
    ]
    if device_sha:
        lines.append(f"device_sha256={device_sha}")
    lines.append(f"generated: {datetime.now(timezone.utc).isoformat()}")
    return lines


def _write_csv(path: Path, header: str, rows: list[str], prov: list[str]) -> None:
    text = "\n".join([f"# {p}" for p in prov] + [header] + rows) + "\n"
    _atomic_write(path, text)


def _write_json(path: Path, doc: dict, subcommand: str, argv: list[str], device_sha: str = "") -> None:
    prov = {
        "tool": "qpmcascade",
        "version": __version__,
        "subcommand": subcommand,
        "command": f"qpmcascade {shlex.join(argv)}",
    }
    if device_sha:
        prov["device_sha256"] = device_sha
    prov["generated"] = datetime.now(timezone.utc).isoformat()
    _atomic_write(path, json.dumps({"provenance": prov, **doc}, indent=2) + "\n")


def _workers(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("QPMCASCADE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"QPMCASCADE_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


def _load_device_arg(args) -> TwoStepDevice:
    return load_device(args.device)


# --- subcommand implementations ------------------------------------------------


def _cmd_map(args, argv) -> int:
    device = _load_device_arg(args)
    pm = phasematch_map(
        device.step1, device.step2, device.signal, args.t, args.pump, workers=_workers(args)
    )
    rows = []
    for i, temp in enumerate(pm.temperature_C):
        for j, pump in enumerate(pm.pump_nm):
            rows.append(
                f"{float(temp)!r},{float(pump)!r},"
                f"{float(pm.step1[i, j])!r},{float(pm.step2[i, j])!r}"
            )
    _write_csv(
        args.output,
        "temperature_C,pump_nm,transfer_step1,transfer_step2",
        rows,
        _provenance_lines("map", argv, device.source_sha256),
    )
    return 0


def _cmd_tune(args, argv) -> int:
    device = _load_device_arg(args)
    points = tuning_curve(
        device.step1, device.step2, device.signal, device.pump, args.dt
    )
    rows = [f"{p.dT_C!r},{p.target_nm!r},{p.transfer!r}" for p in points]
    _write_csv(
        args.output,
        "dT_C,target_nm,transfer",
        rows,
        _provenance_lines("tune", argv, device.source_sha256),
    )
    return 0


def _cmd_efficiency(args, argv) -> int:
    device = _load_device_arg(args)
    model1 = StepEfficiencyModel(args.eta_nor1, device.step1.length_mm, args.eta_max1)
    model2 = StepEfficiencyModel(args.eta_nor2, device.step2.length_mm, args.eta_max2)
    transmission = budget_transmission(device.loss_budget)
    rows = []
    for power in args.pump_w:
        eta1 = step_efficiency(model1, power)
        eta2 = step_efficiency(model2, power)
        total = cascade_efficiency(model1, model2, power)
        rows.append(f"{float(power)!r},{eta1!r},{eta2!r},{total!r},{total * transmission!r}")
    _write_csv(
        args.output,
        "pump_W,eta_step1,eta_step2,eta_internal,eta_external",
        rows,
        _provenance_lines("efficiency", argv, device.source_sha256),
    )
    return 0


def _cmd_noise(args, argv) -> int:
    counts = NoiseCounts(
        total_cps=args.total,
        dark_cps=args.dark,
        detector_efficiency=args.det_eff,
        bandwidth_GHz=args.bw_ghz,
        external_transmission=args.transmission,
    )
    _write_json(args.output, noise_report_to_dict(noise_report(counts), counts), "noise", argv)
    return 0


def _cmd_lineshape(args, argv) -> int:
    device = _load_device_arg(args)
    weights = tuple(args.weights) if args.weights else (1.0,)
    if args.analytic:
        grid = np.asarray(args.grid)
        rows = []
        for lam in grid:
            dk = thermal_sfg_mismatch(device.step2, device.pump, float(lam))
            rows.append(f"{float(lam)!r},{lineshape_analytic(dk, device.step2.length_mm)!r}")
        _write_csv(
            args.output,
            "wavelength_nm,intensity",
            rows,
            _provenance_lines("lineshape", argv, device.source_sha256),
        )
        return 0
    spec = thermal_sfg_lineshape(
        device.step2,
        device.pump,
        args.grid,
        weights=weights,
        planck_temperature_K=args.planck_K,
    )
    rows = [f"{float(lam)!r},{float(val)!r}" for lam, val in zip(spec.wavelength_nm, spec.intensity)]
    _write_csv(
        args.output,
        "wavelength_nm,intensity",
        rows,
        _provenance_lines("lineshape", argv, device.source_sha256),
    )
    return 0


def _cmd_convert_spectrum(args, argv) -> int:
    device = _load_device_arg(args)
    spectrum = Spectrum.from_csv(args.input)
    converted, dropped = convert_spectrum(
        spectrum, device.cascade_transfer(), device.map_to_target
    )
    prov = _provenance_lines("convert-spectrum", argv, device.source_sha256)
    prov.insert(len(prov) - 1, f"dropped_samples={dropped}")
    rows = [f"{float(lam)!r},{float(val)!r}" for lam, val in zip(converted.wavelength_nm, converted.intensity)]
    _write_csv(args.output, "wavelength_nm,intensity", rows, prov)
    return 0


def _cmd_fit(args, argv) -> int:
    fixed = args.fixed or {}
    model = registry_model(args.model, length_mm=fixed.get("L", fixed.get("length_mm", 20.0)))
    data = Spectrum.from_csv(args.data) if args.data.suffix == ".csv" else None
    if data is None:
        raise DomainError("fit expects a CSV data file")
    x, y = data.wavelength_nm, data.intensity
    if args.initial:
        initial = [args.initial[name] for name in model.parameter_names]
    else:
        initial = auto_initial(model, x, y)
    result = fit(model, x, y, initial)
    report = result.as_dict()
    report["rms"] = goodness(result, x, y)["rms"]
    report["constants"] = dict(model.constants)
    _write_json(args.output, report, "fit", argv)
    return 0


def _cmd_solve_device(args, argv) -> int:
    device = _load_device_arg(args)
    parasitics = enumerate_parasitics(
        device.step2, device.pump, (args.window[0], args.window[1])
    )
    doc = {
        "signal_nm": device.signal.nm,
        "pump_nm": device.pump.nm,
        "intermediate_nm": device.intermediate.nm,
        "target_nm": device.target.nm,
        "sections": [
            {
                "role": s.role,
                "length_mm": s.length_mm,
                "poling_period_um": s.poling_period_um,
                "qpm_order": s.qpm_order,
                "temperature_C": s.temperature_C,
            }
            for s in (device.step1, device.step2)
        ],
        "coupling": dict(device.coupling),
        "budget_transmission": budget_transmission(device.loss_budget),
        "parasitics": [p.to_dict() for p in parasitics],
    }
    _write_json(args.output, doc, "solve-device", argv, device.source_sha256)
    return 0


def _cmd_modes(args, argv) -> int:
    device = _load_device_arg(args)
    if device.geometry is None:
        raise DomainError("device file has no geometry block; modes needs one")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ModeShortfallWarning)
        solutions = solve_modes(device.geometry, Wavelength(args.lam), args.t, count=args.count)
    doc = {
        "wavelength_nm": args.lam,
        "temperature_C": args.t,
        "requested": args.count,
        "found": len(solutions),
        "warnings": [str(w.message) for w in caught],
        "modes": [
            {"mode_index": s.mode_index, "n_eff": s.n_eff, "residual": s.residual}
            for s in solutions
        ],
    }
    _write_json(args.output, doc, "modes", argv, device.source_sha256)
    if args.field_dump and solutions:
        _atomic_write(Path(args.field_dump), "\n".join(field_to_csv_rows(solutions[0])) + "\n")
    return 0


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpmcascade",
        description="Two-section poled-waveguide cascaded DFG toolkit",
    )
    parser.add_argument("--version", action="version", version=f"qpmcascade {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, device=True):
        p.add_argument("-o", "--output", type=Path, required=True, help="artifact path")
        if device:
            p.add_argument("--device", type=Path, required=True, help="device JSON file")
        p.add_argument("--threads", type=int, default=None, help="worker threads (1 = serial)")

    p = sub.add_parser("map", help="phase-matching heatmap over (T, pump)")
    add_common(p)
    p.add_argument("--t", type=_range_spec, required=True, help="temperature grid lo:hi:count (C)")
    p.add_argument("--pump", type=_range_spec, required=True, help="pump grid lo:hi:count (nm)")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("tune", help="target wavelength vs section-2 temperature offset")
    add_common(p)
    p.add_argument("--dt", type=_range_spec, required=True, help="offset grid lo:hi:count (C)")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("efficiency", help="step and cascade efficiency vs pump power")
    add_common(p)
    p.add_argument("--eta-nor1", type=float, required=True, help="step-1 eta_nor (/W/mm^2)")
    p.add_argument("--eta-nor2", type=float, required=True, help="step-2 eta_nor (/W/mm^2)")
    p.add_argument("--eta-max1", type=float, default=1.0)
    p.add_argument("--eta-max2", type=float, default=1.0)
    p.add_argument("--pump-w", type=_range_spec, required=True, help="pump power grid lo:hi:count (W)")
    p.set_defaults(func=_cmd_efficiency)

    p = sub.add_parser("noise", help="counts to noise spectral density report")
    add_common(p, device=False)
    p.add_argument("--total", type=float, required=True, help="total count rate (cps)")
    p.add_argument("--dark", type=float, required=True, help="dark count rate (cps)")
    p.add_argument("--det-eff", type=float, required=True, help="detector efficiency (0..1)")
    p.add_argument("--bw-ghz", type=float, required=True, help="detection bandwidth (GHz)")
    p.add_argument("--transmission", type=float, required=True, help="external transmission (0..1)")
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser("lineshape", help="thermal-SFG noise line shape")
    add_common(p)
    p.add_argument("--grid", type=_range_spec, required=True, help="wavelength grid lo:hi:count (nm)")
    p.add_argument("--weights", type=lambda s: [float(v) for v in s.split(",")], default=None,
                   help="position polynomial a0,a1,... (default uniform)")
    p.add_argument("--analytic", action="store_true", help="use the closed-form shape")
    p.add_argument("--planck-K", type=float, default=None, help="Planck-weight seed at this kelvin")
    p.set_defaults(func=_cmd_lineshape)

    p = sub.add_parser("convert-spectrum", help="push a spectrum through the cascade")
    add_common(p)
    p.add_argument("--input", type=Path, required=True, help="input spectrum CSV")
    p.set_defaults(func=_cmd_convert_spectrum)

    p = sub.add_parser("fit", help="fit a registry model to CSV data")
    add_common(p, device=False)
    p.add_argument("--model", required=True, help="registry model name")
    p.add_argument("--data", type=Path, required=True, help="CSV with x,y columns")
    p.add_argument("--initial", type=_assignments, default=None, help="name=value,... start point")
    p.add_argument("--fixed", type=_assignments, default=None, help="fixed constants, e.g. L=20")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("solve-device", help="solve periods and report the operating point")
    add_common(p)
    p.add_argument("--window", type=_range_spec, default=np.array([1000.0, 1620.0]),
                   help="parasitic detection window lo:hi:2 (nm)")
    p.set_defaults(func=_cmd_solve_device)

    p = sub.add_parser("modes", help="waveguide eigenmodes at (lam, T)")
    add_common(p)
    p.add_argument("--lam", type=float, required=True, help="wavelength (nm)")
    p.add_argument("--t", type=float, required=True, help="temperature (C)")
    p.add_argument("--count", type=int, default=2)
    p.add_argument("--field-dump", type=Path, default=None, help="CSV dump of the fundamental field")
    p.set_defaults(func=_cmd_modes)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except ConverterError as exc:
        print(f"code={exc.code}, msg={exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"code=io_error, msg={exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
