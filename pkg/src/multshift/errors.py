"""Exception types and the CLI exit-code table."""


class MultshiftError(Exception):
    exit_code = 1


class ConfigError(MultshiftError):
    exit_code = 2


class EmptyOmega(MultshiftError):
    exit_code = 3


class DepthExceeded(MultshiftError):
    exit_code = 4


class BudgetExceeded(MultshiftError):
    exit_code = 5

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class NonContracting(MultshiftError):
    exit_code = 6


class NotAProbability(MultshiftError):
    exit_code = 7


class InadmissibleWord(MultshiftError):
    exit_code = 8


class ResolutionTooCoarse(MultshiftError):
    exit_code = 9


class IndexOutOfSchedule(MultshiftError):
    exit_code = 10


class TieWarning(UserWarning):
    """Two ordering keys of the schedule coincide exactly."""


EXIT_CODES = {
    cls.__name__: cls.exit_code
    for cls in (ConfigError, EmptyOmega, DepthExceeded, BudgetExceeded,
                NonContracting, NotAProbability, InadmissibleWord,
                ResolutionTooCoarse, IndexOutOfSchedule)
}
