"""
Exceptions raised by the engine.

Verification verdicts are never raised: a failed identity is a report with status "fail".
Exceptions signal misuse (bad shapes, unknown names), degenerate inputs (poles, singular
matrices) and internal self-consistency failures.
"""


class EngineError(Exception):
    pass


class UniverseMismatchError(EngineError):
    pass


class UnknownVariableError(EngineError):
    pass


class DivisionByZeroError(EngineError, ZeroDivisionError):
    pass


class PoleError(EngineError):
    """Substitution or evaluation landed on a pole; the caller must perturb or resample."""


class ShapeError(EngineError):
    pass


class DegreeError(EngineError):
    pass


class SingularMatrixError(EngineError):
    pass


class InvalidConnectionError(EngineError):
    pass


class ConsistencyError(EngineError):
    """Two independent routes to the same quantity disagreed. This is a bug, not a verdict."""


class ResamplingExhaustedError(EngineError):
    pass


class ParseError(EngineError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class SchemaError(EngineError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
