from __future__ import annotations


class TopologicError(Exception):
    """
    Base class for all errors raised by topologic.

    ``exit_code`` is what the command line tool returns when the error reaches
    it.
    """
    exit_code = 3


class UsageError(TopologicError):
    exit_code = 2


class FormulaSyntaxError(UsageError):
    """
    Error parsing a formula.

    ``offset`` is a byte offset into the UTF-8 encoding of the text.
    """

    def __init__(self, message: str, *, kind: str, offset: int, text: str = ""):
        super().__init__(message)
        self.message = message
        self.kind = kind
        self.offset = offset
        self.text = text

    def __str__(self) -> str:
        return f"{self.kind} error at byte {self.offset}: {self.message}"


class InputError(TopologicError):
    """
    An input file or value violates its invariants
    """


class ModelError(InputError):
    pass


class FrameError(InputError):
    pass


class AlgebraError(InputError):
    pass


class InvalidWorld(InputError):
    pass


class PreconditionError(TopologicError):
    """
    The arguments do not satisfy the precondition of an operation
    """


class InvariantViolation(TopologicError):
    """
    Two independent computations that must agree did not
    """


class BudgetExhausted(TopologicError):
    exit_code = 4

    def __init__(self, message: str, *, trace: list[str] | None = None):
        super().__init__(message)
        self.trace = trace or []
