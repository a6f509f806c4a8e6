"""Line-oriented problem definitions.

```
name = example1
lhs_extra = t*y2                # G in y''' + G(t, y, y', y'') = f(t)
forcing = manufactured          # or an expression in t
exact = exp(t^2*(t-1)^2)        # required when forcing is manufactured
default_n = 51
anchor = exact                  # optional: exact or a constant expression
```
"""

import math
import re
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Callable, Iterable, TypeVar

import numpy as np
from impuls.errors import MultipleDataErrors

from .errors import BCViolation, DomainError, InputError, ProblemFileError
from .expr import Expr, add, differentiate, eval_ast, free_variables, substitute, to_text
from .parser import parse

KEYS = frozenset({"name", "lhs_extra", "forcing", "exact", "default_n", "anchor"})
REQUIRED_KEYS = ("name", "lhs_extra", "forcing")
DEFAULT_N = 26

LHS_VARIABLES = frozenset({"t", "y", "y1", "y2"})
PERIODICITY_TOLERANCE = 1e-9
FORCING_CHECK_POINTS = 11

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")

_T = TypeVar("_T")


@dataclass(frozen=True)
class ProblemFile:
    name: str
    lhs_extra: Expr
    forcing: Expr | None  # None when manufactured from `exact`
    exact: Expr | None
    default_n: int
    anchor: Expr | str | None  # "exact", a constant expression, or unset
    source: str = "<string>"

    @property
    def manufactured(self) -> bool:
        return self.forcing is None


@dataclass(frozen=True)
class _Entry:
    key: str
    value: Any
    line: int


def _parse_expression(source: str, line: int, key: str, text: str) -> Expr:
    try:
        return parse(text)
    except InputError as e:
        raise ProblemFileError(source, line, f"{key}: {e}") from e


def _parse_entry(source: str, numbered_line: tuple[int, str]) -> _Entry:
    line_no, line = numbered_line
    key, equals, raw_value = line.partition("=")
    key, value = key.strip(), raw_value.strip()

    if not equals:
        raise ProblemFileError(source, line_no, f"expected 'key = value', got {line!r}")
    elif key not in KEYS:
        raise ProblemFileError(source, line_no, f"unknown key {key!r}")
    elif not value:
        raise ProblemFileError(source, line_no, f"{key}: missing value")

    match key:
        case "name":
            if not _IDENTIFIER.fullmatch(value):
                raise ProblemFileError(source, line_no, f"name: not an identifier: {value!r}")
            return _Entry(key, value, line_no)
        case "default_n":
            try:
                n = int(value)
            except ValueError:
                raise ProblemFileError(
                    source, line_no, f"default_n: not an integer: {value!r}"
                ) from None
            if n < 2:
                raise ProblemFileError(source, line_no, f"default_n: must be at least 2, got {n}")
            return _Entry(key, n, line_no)
        case "forcing" if value == "manufactured":
            return _Entry(key, None, line_no)
        case "anchor" if value == "exact":
            return _Entry(key, "exact", line_no)
        case _:
            return _Entry(key, _parse_expression(source, line_no, key, value), line_no)


def _content_lines(text: str) -> list[tuple[int, str]]:
    lines = list[tuple[int, str]]()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.partition("#")[0].strip()
        if line:
            lines.append((line_no, line))
    return lines


def _collect(source: str, iterable: Iterable[_T]) -> list[_T]:
    """MultipleDataErrors.catch_all, re-raising a lone error as itself."""
    try:
        return MultipleDataErrors.catch_all(f"problem file {source}", iterable)
    except MultipleDataErrors as e:
        if len(e.errors) == 1:
            raise e.errors[0] from None
        raise


def _index_entries(source: str, entries: list[_Entry]) -> dict[str, _Entry]:
    by_key = dict[str, _Entry]()

    def add_entry(entry: _Entry) -> None:
        if entry.key in by_key:
            raise ProblemFileError(
                source,
                entry.line,
                f"duplicate key {entry.key!r} (first defined on line {by_key[entry.key].line})",
            )
        by_key[entry.key] = entry

    _collect(source, map(add_entry, entries))
    return by_key


def parse_problem_text(text: str, source: str = "<string>") -> ProblemFile:
    """Parses and validates a problem definition, reporting every bad line at once."""
    entries = _collect(source, map(partial(_parse_entry, source), _content_lines(text)))
    by_key = _index_entries(source, entries)

    missing = [k for k in REQUIRED_KEYS if k not in by_key]
    if missing:
        raise ProblemFileError(source, None, f"missing required key(s): {', '.join(missing)}")

    def get(key: str, default: Any = None) -> Any:
        return by_key[key].value if key in by_key else default

    problem = ProblemFile(
        name=get("name"),
        lhs_extra=get("lhs_extra"),
        forcing=get("forcing"),
        exact=get("exact"),
        default_n=get("default_n", DEFAULT_N),
        anchor=get("anchor"),
        source=source,
    )

    def line_of(key: str) -> int | None:
        return by_key[key].line if key in by_key else None

    checks: list[Callable[[], None]] = [
        partial(_check_lhs_variables, problem, line_of("lhs_extra")),
        partial(_check_t_only, problem, "forcing", problem.forcing, line_of("forcing")),
        partial(_check_t_only, problem, "exact", problem.exact, line_of("exact")),
        partial(_check_exact_required, problem, line_of("forcing"), line_of("anchor")),
        partial(_check_anchor, problem, line_of("anchor")),
        partial(_check_periodic_exact, problem),
    ]
    _collect(source, map(_run, checks))
    return problem


def load_problem_file(path: str | Path) -> ProblemFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ProblemFileError(str(path), None, f"cannot read: {e.strerror or e}") from e
    return parse_problem_text(text, str(path))


# Validation


def _run(check: Callable[[], None]) -> None:
    check()


def _check_lhs_variables(problem: ProblemFile, line: int | None) -> None:
    variables = free_variables(problem.lhs_extra)
    if "y3" in variables:
        raise ProblemFileError(
            problem.source,
            line,
            "lhs_extra: y3 is not allowed (the equation is solved for y''')",
        )
    if not variables <= LHS_VARIABLES:
        extra = ", ".join(sorted(variables - LHS_VARIABLES))
        raise ProblemFileError(problem.source, line, f"lhs_extra: unexpected variable(s) {extra}")


def _check_t_only(problem: ProblemFile, key: str, expr: Expr | None, line: int | None) -> None:
    if expr is None:
        return
    extra = free_variables(expr) - {"t"}
    if extra:
        raise ProblemFileError(
            problem.source,
            line,
            f"{key}: must depend on t only, found {', '.join(sorted(extra))}",
        )


def _check_exact_required(
    problem: ProblemFile,
    forcing_line: int | None,
    anchor_line: int | None,
) -> None:
    if problem.exact is not None:
        return
    if problem.manufactured:
        raise ProblemFileError(
            problem.source, forcing_line, "forcing: manufactured requires an exact solution"
        )
    if problem.anchor == "exact":
        raise ProblemFileError(
            problem.source, anchor_line, "anchor: exact requires an exact solution"
        )


def _check_anchor(problem: ProblemFile, line: int | None) -> None:
    if problem.anchor is None or isinstance(problem.anchor, str):
        return
    if free_variables(problem.anchor):
        raise ProblemFileError(problem.source, line, "anchor: must be a constant expression")


def _check_periodic_exact(problem: ProblemFile) -> None:
    if problem.exact is None or free_variables(problem.exact) - {"t"}:
        return

    derivative = problem.exact
    for order in range(3):
        try:
            at_0 = eval_ast(derivative, {"t": 0.0})
            at_1 = eval_ast(derivative, {"t": 1.0})
        except DomainError as e:
            raise ProblemFileError(problem.source, None, f"exact: {e}") from e
        assert isinstance(at_0, float) and isinstance(at_1, float)
        if not abs(at_0 - at_1) <= PERIODICITY_TOLERANCE:
            raise BCViolation(
                f"{problem.source}: exact solution {to_text(problem.exact)} violates the "
                f"periodic condition on derivative {order}: {at_0!r} at t=0, {at_1!r} at t=1"
            )
        derivative = differentiate(derivative, "t")


# Manufactured forcing


def exact_derivatives(exact: Expr, count: int = 4) -> list[Expr]:
    """[u, u', u'', …] up to `count` terms."""
    derivatives = [exact]
    while len(derivatives) < count:
        derivatives.append(differentiate(derivatives[-1], "t"))
    return derivatives


def derive_forcing(problem: ProblemFile) -> Expr:
    """f(t) = u'''(t) + G(t, u(t), u'(t), u''(t)) for the exact solution u."""
    if problem.exact is None:
        raise ProblemFileError(problem.source, None, "forcing: manufactured requires exact")

    u, u1, u2, u3 = exact_derivatives(problem.exact)
    forcing = add(u3, substitute(problem.lhs_extra, {"y": u, "y1": u1, "y2": u2}))

    try:
        values = eval_ast(forcing, {"t": np.linspace(0.0, 1.0, FORCING_CHECK_POINTS)})
    except DomainError as e:
        raise ProblemFileError(problem.source, None, f"manufactured forcing: {e}") from e
    if not np.all(np.isfinite(values)):
        raise ProblemFileError(
            problem.source, None, "manufactured forcing is not finite on [0, 1]"
        )
    return forcing


def evaluate_anchor(problem: ProblemFile) -> float:
    """The constant c that the solution starts from: y(0) by default when an exact solution
    is known, 0 otherwise."""
    anchor = problem.anchor
    if anchor is None:
        anchor = "exact" if problem.exact is not None else None

    if anchor is None:
        return 0.0
    elif anchor == "exact":
        assert problem.exact is not None
        value = eval_ast(problem.exact, {"t": 0.0})
    else:
        assert not isinstance(anchor, str)
        value = eval_ast(anchor, {})

    value = float(value)
    if not math.isfinite(value):
        raise ProblemFileError(problem.source, None, f"anchor is not finite: {value!r}")
    return value
