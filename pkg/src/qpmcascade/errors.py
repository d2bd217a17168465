"""Exception hierarchy shared by all modules.

Every error carries a short machine-readable ``code`` so the CLI can emit
single-line diagnostics of the form ``code=<code>, msg=<text>``.
"""

from __future__ import annotations


class ConverterError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class DomainError(ConverterError, ValueError):
    """An argument is outside the mathematical domain of an operation."""

    code = "domain_error"


class RangeError(DomainError):
    """A value violates a declared validity range.

    The message names the violated bound; the offending value and the
    range are kept as attributes for programmatic inspection.
    """

    code = "range_error"

    def __init__(self, quantity: str, value: float, low: float, high: float):
        self.quantity = quantity
        self.value = value
        self.low = low
        self.high = high
        super().__init__(
            f"{quantity}={value!r} outside valid range [{low!r}, {high!r}]"
        )


class CapabilityError(ConverterError):
    """The requested feature is not supported by this object."""

    code = "capability_error"


class NoSolutionError(ConverterError):
    """A root/solution search found nothing inside its window."""

    code = "no_solution"


class DesignError(ConverterError):
    """The requested design is physically impossible (e.g. negative poling period)."""

    code = "design_error"


class MaterialFileError(ConverterError, ValueError):
    """A material data file failed to parse or validate."""

    code = "material_file_error"


class DeviceFileError(ConverterError, ValueError):
    """A device description file failed to parse or validate."""

    code = "device_file_error"


class NumericError(ConverterError, RuntimeError):
    """A numerical procedure failed to converge or produced invalid values."""

    code = "numeric_error"


class RankDeficiencyError(NumericError):
    """The normal matrix of a least-squares problem is singular."""

    code = "rank_deficiency"
