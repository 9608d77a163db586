class ConfigurationError(ValueError):
    """Raise this when a model, config or initial point cannot be used as given."""

    def __init__(self, message):
        """Raise this when a model, config or initial point cannot be used as given.

        Args:
            message: (str) message when exception is raised
        """
        super().__init__(message)
        self.message = message


class DimensionalityError(ConfigurationError):
    """Raise this when the shape of a matrix or sequence does not match the model dimensions."""


class NonFiniteError(ValueError):
    """Raise this when a matrix or vector contains NaN or infinite entries."""

    def __init__(self, message):
        """Raise this when a matrix or vector contains NaN or infinite entries.

        Args:
            message: (str) message when exception is raised
        """
        super().__init__(message)
        self.message = message


class InfeasibleError(Exception):
    """Raise this when a semidefinite program has no solution.

    The attribute `lmi` names the constraint group that could not be satisfied
    and `solution` holds the solver diagnostics.
    """

    def __init__(self, message, lmi=None, solution=None):
        """Raise this when a semidefinite program has no solution.

        Args:
            message: (str) message when exception is raised
            lmi: (str) name of the failing constraint group
            solution: (SdpSolution) the solver output
        """
        super().__init__(message)
        self.message = message
        self.lmi = lmi
        self.solution = solution


class NumericalFailureError(Exception):
    """Raise this when a solver fails, or returns a point that does not pass verification."""

    def __init__(self, message, solution=None):
        """Raise this when a solver fails, or returns a point that does not pass verification.

        Args:
            message: (str) message when exception is raised
            solution: (SdpSolution) the solver output, if any
        """
        super().__init__(message)
        self.message = message
        self.solution = solution


class DatasetFormatError(ValueError):
    """Raise this when a JSON artifact cannot be parsed."""

    def __init__(self, message, path=None, line=None, column=None):
        """Raise this when a JSON artifact cannot be parsed.

        Args:
            message: (str) message when exception is raised
            path: (str) file that failed to parse
            line: (int) line of the failure, if known
            column: (int) column of the failure, if known
        """
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}:{column}"
            location += ": "
        super().__init__(location + message)
        self.message = location + message
        self.path = path
        self.line = line
        self.column = column


class SchemaVersionError(ValueError):
    """Raise this when an artifact declares a schema version we cannot read."""

    def __init__(self, message):
        """Raise this when an artifact declares a schema version we cannot read.

        Args:
            message: (str) message when exception is raised
        """
        super().__init__(message)
        self.message = message


class DatasetValidationError(ValueError):
    """Raise this when a loaded dataset violates its own invariants (e.g. declared delta)."""

    def __init__(self, message):
        """Raise this when a loaded dataset violates its own invariants.

        Args:
            message: (str) message when exception is raised
        """
        super().__init__(message)
        self.message = message


class TrainingAbortedError(RuntimeError):
    """Raise this when training rolls back too many times in a row."""

    def __init__(self, message, history=None):
        """Raise this when training rolls back too many times in a row.

        Args:
            message: (str) message when exception is raised
            history: (list) epoch records collected before the abort
        """
        super().__init__(message)
        self.message = message
        self.history = history


class CertificateWarning(Warning):
    """
    Warning for certificates that fail verification and get restored.
    """

    def __init__(self, message):
        """
        Init.
        """
        super().__init__(message)
        self.message = message


class DivergenceWarning(Warning):
    """
    Warning for simulations stopped by the divergence guard.
    """

    def __init__(self, message):
        """
        Init.
        """
        super().__init__(message)
        self.message = message
