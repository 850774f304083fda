"""Exceptions raised by stagrover.

Each exception carries the process exit code used by the command line
    interface, so that callers can map failures to the stable contract
    0 success, 2 divergence, 3 configuration error, 4 I/O error.
"""

EXIT_SUCCESS = 0
EXIT_DIVERGENCE = 2
EXIT_CONFIGURATION = 3
EXIT_OUTPUT = 4


class StaError(Exception):
    """Base class of stagrover exceptions."""

    default_code = EXIT_CONFIGURATION

    def __init__(self, description=None, code=None):
        """Store error code and description."""
        if code is None:
            code = self.default_code
        self._code = code
        if description is None:
            self._description = 'Generic error'
        else:
            self._description = description
        super().__init__(self.description)

    @property
    def code(self):
        """Exit code of the command line interface."""
        return self._code

    @property
    def description(self):
        """Human-readable description of error."""
        return self._description


class ConfigurationError(StaError):
    """Invalid parameters, malformed inputs or unresolved time grid."""


class DegenerateGapError(StaError):
    """Energy gap below the configured floor."""

    def __init__(self, gap, floor):
        self._gap = gap
        self._floor = floor
        super().__init__(f"Energy gap {gap:.3e} is below floor {floor:.1e}")

    @property
    def gap(self):
        return self._gap


class ScheduleRangeError(StaError):
    """Time outside the schedule domain [0, t_f]."""

    def __init__(self, time, final_time):
        self._time = time
        super().__init__(f"Time {time!r} is outside [0, {final_time!r}]")


class PlanFormatError(ConfigurationError):
    """Malformed plan file."""

    def __init__(self, description, line_number=None):
        self._line_number = line_number
        if line_number is not None:
            description = f"Line {line_number}: {description}"
        super().__init__(description)

    @property
    def line_number(self):
        """Line of the plan file where parsing failed (1-based)."""
        return self._line_number


class DivergenceError(StaError):
    """Inverse-engineered schedule diverges."""

    default_code = EXIT_DIVERGENCE

    def __init__(self, time, magnitude, reason='bound exceeded'):
        self._time = time
        self._magnitude = magnitude
        super().__init__(
            f"Schedule diverges at t={time:.6g} "
            f"(|A|, |B| up to {magnitude:.3e}, {reason})"
        )

    @property
    def time(self):
        """Time of the first divergent sample."""
        return self._time

    @property
    def magnitude(self):
        return self._magnitude


class OutputError(StaError):
    """Results could not be written."""

    default_code = EXIT_OUTPUT
