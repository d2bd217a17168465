import pytest

from qpmcascade.device import load_device, reference_device_path
from qpmcascade.dispersion import BulkIndexProvider, SellmeierModel, builtin_material
from qpmcascade.qpm import section_with_solved_period
from qpmcascade.spectral import ProcessKind, Wavelength, dfg_target

OPERATING_T_C = 59.26
PUMP_NM = 2152.9
SIGNAL_NM = 637.2


@pytest.fixture(scope="session")
def lithium_niobate():
    return builtin_material("lithium_niobate_e")


@pytest.fixture(scope="session")
def lithium_tantalate():
    return builtin_material("lithium_tantalate_e")


@pytest.fixture(scope="session")
def ln_provider(lithium_niobate):
    return BulkIndexProvider(lithium_niobate)


@pytest.fixture(scope="session")
def constant_material():
    """Synthetic dispersionless medium, n = 2 everywhere."""
    return SellmeierModel(
        name="toy_constant",
        polarization="none",
        temperature_form="constant",
        coefficients={"n2": 4.0},
        wavelength_range_um=(0.1, 20.0),
        temperature_range_C=(-100.0, 500.0),
    )


@pytest.fixture(scope="session")
def solved_sections(ln_provider):
    """Both sections solved on the exact energy-conserving chain."""
    signal = Wavelength(SIGNAL_NM)
    pump = Wavelength(PUMP_NM)
    step1 = section_with_solved_period(
        "step1", 20.0, ln_provider, ProcessKind.DFG, signal, pump, OPERATING_T_C
    )
    mid = dfg_target(signal, pump)
    step2 = section_with_solved_period(
        "step2", 20.0, ln_provider, ProcessKind.DFG, mid, pump, OPERATING_T_C
    )
    return step1, step2


@pytest.fixture(scope="session")
def reference_device():
    return load_device(reference_device_path())
