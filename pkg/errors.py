"""
Exception hierarchy for the DB-MMD toolkit.

Library modules raise these; only the harness (experiment.py, main.py) catches them.
"""


class DbMmdError(Exception):
    """Base class for every error raised by the toolkit."""


class ParameterError(DbMmdError, ValueError):
    """An argument is outside its documented range."""


class DimensionError(ParameterError):
    """Shapes of two operands do not agree."""


class EmptyClassError(ParameterError):
    """A class has no source samples."""


class BandwidthError(ParameterError):
    """A kernel bandwidth could not be determined or is not positive."""


class UnsupportedModelError(ParameterError):
    """The requested model combination does not exist (e.g. MEDA+DB)."""


class ConfigError(ParameterError):
    """An experiment or adaptation configuration is invalid."""


class NumericError(DbMmdError, ArithmeticError):
    """A linear-algebra step failed (non positive definite operand, singular system)."""


class StateError(DbMmdError, RuntimeError):
    """An operation was called before its inputs were available (e.g. no pseudo-labels)."""


class DataFormatError(DbMmdError, ValueError):
    """A feature file could not be parsed."""


class NonFiniteError(DataFormatError):
    """A feature file contains NaN or infinite entries."""


class LabelRangeError(DataFormatError):
    """A label is not an integer in the allowed range."""


class AdaptationError(DbMmdError):
    """A sub-stage of an adaptation run failed; carries the model name and iteration."""

    def __init__(self, message, model=None, iteration=None):
        super().__init__(message)
        self.model = model
        self.iteration = iteration
