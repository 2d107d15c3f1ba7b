"""Exception hierarchy.

Every error raised on purpose by the toolkit derives from
:class:`RobotTrafficError`.  The intermediate classes group errors by the
pipeline stage that raises them, which is what the command line uses to pick
an exit code.
"""


class RobotTrafficError(Exception):
    """Base class for all toolkit errors."""


# -- ingest -----------------------------------------------------------------

class LogParseError(RobotTrafficError, ValueError):
    """A log record could not be decoded."""


class MalformedLine(LogParseError):
    pass


class BadTimestamp(LogParseError):
    pass


class BadStatus(LogParseError):
    pass


class NonPositiveTimeout(RobotTrafficError, ValueError):
    pass


# -- fitting ----------------------------------------------------------------

class FitError(RobotTrafficError, ValueError):
    """A model parameter could not be estimated from the data."""


class EmptySample(FitError):
    pass


class TooFewSamples(FitError):
    pass


class NonPositiveSample(FitError):
    pass


class NonPositiveDuration(FitError):
    pass


class AllOnes(FitError):
    """Every session length equals one; the Zeta likelihood has no maximum."""


class DomainError(RobotTrafficError, ValueError):
    pass


class EmptyTrace(FitError):
    pass


class EmptyCatalog(FitError):
    pass


class UnknownSubdirectory(RobotTrafficError, KeyError):
    pass


class ZeroGlobalCounts(FitError):
    pass


class InconsistentCounts(FitError):
    pass


class EmptyInput(FitError):
    pass


class TooFewSessions(FitError):
    pass


# -- generation and evaluation ---------------------------------------------

class NoInactiveRobot(RobotTrafficError, RuntimeError):
    pass


class InvalidModel(RobotTrafficError, ValueError):
    pass


class NonPositiveCapacity(RobotTrafficError, ValueError):
    pass
