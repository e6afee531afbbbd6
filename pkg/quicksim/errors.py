"""
Exception hierarchy shared by the library and the command line.

The CLI maps each family onto an exit code; library code only raises.
"""


class QuickError(Exception):
    """Base class for every error raised by quicksim."""

    exit_code = 2


class ShapeError(QuickError):
    """Matrix or tile dimensions violate a divisibility requirement."""


class DomainError(QuickError):
    """Input values are outside the domain of the operation (e.g. non-finite weights)."""


class LayoutError(QuickError):
    """A packed weight stream has the wrong layout tag for the requested operation."""


class BoundsError(QuickError):
    """A shared-memory access falls outside the modelled buffer or is misaligned."""


class FragmentContractError(QuickError):
    """An mma operand fragment has unpopulated register slots."""


class ProblemError(QuickError):
    """A GEMM problem description is invalid or incompatible with the weights."""


class ContainerFormatError(QuickError):
    """A weight container is not a readable QWK1 file."""

    exit_code = 3


class IntegrityError(ContainerFormatError):
    """A weight container is truncated or its sections are inconsistent."""


class VerificationFailure(QuickError):
    """Baseline and QUICK data paths disagree.

    ``location`` names the first mismatch, e.g. ``{"stage": "C", "m": 3, "n": 17}``.
    """

    exit_code = 1

    def __init__(self, message: str, location: dict | None = None):
        super().__init__(message)
        self.location = location or {}
