from typing import Any, Iterable

from impuls.errors import DataError


class SolverError(Exception):
    """Base class for every error raised by periodic_rk.

    `exit_code` is what the command-line interface returns when the error reaches it.
    """

    exit_code = 2


class InputError(SolverError):
    exit_code = 1


class NumericalError(SolverError):
    exit_code = 2


class DomainError(SolverError, ValueError):
    """An argument is outside the real domain of a function, an evaluation point lies outside
    [0, 1], or a derivative order is outside the supported range."""


class ParseError(InputError):
    def __init__(self, message: str, offset: int, expected: Iterable[str]) -> None:
        self.offset = offset
        self.expected = frozenset(expected)
        super().__init__(
            f"{message} at offset {offset} (expected one of: {', '.join(sorted(self.expected))})"
        )


class ProblemFileError(InputError, DataError):
    def __init__(self, source: str, line: int | None, message: str) -> None:
        self.source = source
        self.line = line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


class UnboundVariable(InputError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"variable {name!r} is not bound")


class Unsupported(InputError):
    pass


class BCViolation(InputError, DataError):
    pass


class OutputError(InputError):
    def __init__(self, path: str, reason: str) -> None:
        self.path = path
        super().__init__(f"cannot write to {path!r}: {reason}")


class SingularSystem(NumericalError):
    pass


class ConventionUnresolved(NumericalError):
    pass


class CrossCheckFailure(NumericalError):
    pass


class Breakdown(NumericalError):
    def __init__(self, index: int, pivot: float, largest: float) -> None:
        self.index = index
        super().__init__(
            f"Gram-Schmidt breakdown at function {index}: pivot {pivot:.3e} "
            f"against largest pivot {largest:.3e} (collocation nodes nearly coincide; reduce n)"
        )


class NonFiniteF(NumericalError):
    def __init__(
        self, k: int, t: float, arguments: tuple[float, float, float], value: Any
    ) -> None:
        self.k = k
        self.t = t
        self.arguments = arguments
        super().__init__(
            f"F is not finite at node {k} (t={t!r}, y={arguments[0]!r}, "
            f"y'={arguments[1]!r}, y''={arguments[2]!r}): {value}"
        )


class NoConvergence(NumericalError):
    def __init__(self, last: Any, history: list[float]) -> None:
        self.last = last
        self.history = history
        super().__init__(
            f"Picard repetition did not converge in {len(history)} passes "
            f"(last change {history[-1]:.3e})"
        )

