"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class DomainError(ValueError):
    """A value lies outside the domain of an operation (e.g. log of 0)."""


class ConfigError(ValueError):
    """Invalid hyperparameter or configuration value."""


class DataError(ValueError):
    """Input data is inconsistent with what the model or format expects."""


class ParseError(DataError):
    """A text file could not be parsed; carries the offending line number."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class CompatibilityError(DataError):
    """A saved model and the data (or file format version) do not match."""


class StateError(RuntimeError):
    """An object is used in a state that does not permit the operation."""


class DivergenceError(ArithmeticError):
    """Training produced a non-finite loss."""
