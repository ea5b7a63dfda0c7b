"""Exception hierarchy; the CLI maps each family to an exit code."""


class CrackMDError(Exception):
    exit_code = 1


class ConfigurationError(CrackMDError, ValueError):
    exit_code = 1


class ParseError(ConfigurationError):
    """Malformed input text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(CrackMDError, ArithmeticError):
    exit_code = 3


class NumericalRangeError(NumericalError):
    pass


class NumericalBlowup(NumericalError):
    pass


class AnalysisError(CrackMDError):
    exit_code = 1
