"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class RandConvexError(Exception):
    exit_code = 1


class PreconditionError(RandConvexError, ValueError):
    exit_code = 2


class SchemaError(RandConvexError, ValueError):
    exit_code = 4


class ConvergenceError(RandConvexError, ArithmeticError):
    exit_code = 5


class ExprError(RandConvexError):
    exit_code = 3


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class UnboundNameError(ExprError):
    pass


class DomainError(ExprError):
    def __init__(self, message: str, atom: str):
        super().__init__(f"{message} at atom {atom!r}")
        self.atom = atom


class SamplingError(PreconditionError):
    """A sampler produced no feasible draws."""
