# orbital_stability/errors.py


class InvalidArgument(ValueError):
    """Argument outside the operation's preconditions."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain (e.g. t in {0, 1})."""


class RedirectError(DomainError):
    """The place belongs to a different evaluator."""


class CharacterConstructionError(ValueError):
    pass


class UnsupportedError(ValueError):
    pass


class FitError(ValueError):
    pass


class NewformParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class HeckeViolationError(ValueError):
    def __init__(self, message: str, prime: int, exponent: int):
        super().__init__(message)
        self.prime = prime
        self.exponent = exponent
