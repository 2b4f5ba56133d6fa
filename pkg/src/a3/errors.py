"""Exception types shared across the engine.

Everything user-recoverable (bad input, bad flags, contract violations)
derives from ValidationError; operational failures (dead plugin process,
broken wire protocol) derive from RuntimeFailure. The CLI maps the former
to exit code 1 and the latter to exit code 2.
"""


class A3Error(Exception):
    """Base class for all engine errors."""


class ValidationError(A3Error):
    """Input or configuration violates a documented contract."""


class RuntimeFailure(A3Error):
    """An external process or resource failed at run time."""


# calendar / domain
class CalendarMismatch(ValidationError):
    """A date or day does not belong to the trading calendar in use."""


class LastDayError(ValidationError):
    """Successor requested for the final day of a calendar."""


# ingestion
class ParseError(ValidationError):
    """A file could not be parsed into valid records."""


class OrderError(ValidationError):
    """Records violate a required ordering (e.g. calendar dates)."""


# labeler
class EmptyPositives(ValidationError):
    """Negative sampling requires at least one positive instance."""


class TooFewInstances(ValidationError):
    """A class is too small to be split across train/dev/test."""


# pmi
class DegenerateClasses(ValidationError):
    """PMI needs at least two classes, each with at least one instance."""


class UnknownClass(ValidationError):
    """A class name is not present in the table being queried."""


# metrics
class LengthMismatch(ValidationError):
    """Predictions and golds have different lengths."""


class EmptyInput(ValidationError):
    """A metric was asked to score an empty sequence."""


# cod pipeline
class UnboundPlaceholder(ValidationError):
    """A prompt template references a placeholder with no binding."""


class SingleClass(ValidationError):
    """Baseline training needs at least two distinct labels."""


class GeneratorUnavailable(RuntimeFailure):
    """The generator endpoint died or never answered."""


class PluginProtocolError(RuntimeFailure):
    """A plugin sent a malformed or out-of-contract message."""
