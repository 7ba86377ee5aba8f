"""Shared exception types; the CLI maps them onto exit codes."""


class NodalabError(Exception):
    """Base class for package errors."""


class PreconditionError(NodalabError, ValueError):
    """An operation was called outside its documented parameter range."""

    exit_code = 1


class EmptyDataError(NodalabError, ValueError):
    """No usable input rows / atoms / table entries."""

    exit_code = 2


class BudgetExceededError(NodalabError, RuntimeError):
    """An exhaustive search or enumeration would exceed its configured budget."""

    exit_code = 3


class DegenerateSamplingError(NodalabError, RuntimeError):
    """A sampled field vanished on too many grid cells to classify signs."""

    exit_code = 2


class UnresolvedCensusError(NodalabError, RuntimeError):
    """Component counts did not stabilise before the maximum grid refinement."""

    exit_code = 2

    def __init__(self, count_coarse, count_fine, resolution):
        super().__init__(
            f"counts {count_coarse} vs {count_fine} still differ at resolution {resolution}"
        )
        self.count_coarse = count_coarse
        self.count_fine = count_fine
        self.resolution = resolution
