"""Exception hierarchy for marp."""


class MarpError(Exception):
    """Base class for all marp errors."""


class DimensionMismatchError(MarpError, ValueError):
    pass


class InvalidParameterError(MarpError, ValueError):
    pass


class ScheduleExhaustedError(MarpError, IndexError):
    pass


class RegularityMarginError(MarpError, ValueError):
    """Raised when (1 - theta) * alpha_inf <= 2 * eps."""


class UnsupportedConfigurationError(MarpError, ValueError):
    pass


class NoBasePointsError(MarpError, ValueError):
    pass


class NoDataError(MarpError, ValueError):
    pass


class NotConvergedError(MarpError, ValueError):
    pass


class ConfigError(MarpError, ValueError):
    """Config document failed to parse or validate."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        detail = "; ".join(
            f"{pointer or '/'}: {message}" for pointer, message in problems
        )
        super().__init__(f"Invalid config: {detail}")
