"""Exception types shared across the toolkit."""


class ConvlogicError(Exception):
    """Base class for all toolkit errors."""


class DataError(ConvlogicError):
    """Invalid dataset contents: bad headers, shapes, ranges or values."""


class ProgramError(ConvlogicError):
    """Structurally invalid literal, rule or program."""


class ProgramSyntaxError(ProgramError):
    """Malformed program text. Carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
