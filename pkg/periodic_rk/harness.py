"""Built-in example problems, error tables, convergence runs and CSV output."""

import csv
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Generator, Iterable, Sequence, TextIO

import numpy as np

from .basis import GridSpec
from .errors import DomainError, InputError, OutputError, SolverError
from .kernel import (
    KernelConvention,
    PrintedComparison,
    assemble_constraints,
    compare_printed,
    synthesize_kernel_at,
    verify_reproducing,
)
from .expr import UnivariateFunction
from .options import SolverOptions
from .parser import parse
from .problem_file import ProblemFile, load_problem_file, parse_problem_text
from .solver import ProblemSpec, Solution, basis_for, evaluate_solution, picard_solve, solve

logger = logging.getLogger(__name__)

REPORTING_POINTS = tuple(i / 10 for i in range(11))

EXAMPLES = {
    "example1": """\
# y''' + t y'' = f(t)
name = example1
lhs_extra = t*y2
forcing = manufactured
exact = exp(t^2*(t-1)^2)
default_n = 51
""",
    "example2": """\
# y''' - cos(t) (y'')³ + 2 sinh(y) cosh(y) y' = f(t)
name = example2
lhs_extra = -cos(t)*y2^3 + 2*sinh(y)*cosh(y)*y1
forcing = manufactured
exact = t^2*(1-t)^2/2
default_n = 36
""",
    "example3": """\
# y''' + y'' + t (y')² - acosh(y) = f(t)
name = example3
lhs_extra = y2 + t*y1^2 - acosh(y)
forcing = manufactured
exact = cosh(t^2-t)
default_n = 26
""",
}

DEFAULT_BENCH_N = (11, 26, 51)
TABLE_OPTIONS = SolverOptions.converged()


def example_name(id: int | str) -> str:
    name = id if isinstance(id, str) else f"example{id}"
    if name not in EXAMPLES:
        raise InputError(f"unknown example {name!r} (known: {', '.join(EXAMPLES)})")
    return name


def load_example(id: int | str) -> ProblemFile:
    name = example_name(id)
    return parse_problem_text(EXAMPLES[name], f"<{name}>")


def resolve_problem(reference: str) -> ProblemFile:
    """`example1`..`example3` or a path to a problem file."""
    if reference in EXAMPLES:
        return load_example(reference)
    return load_problem_file(reference)


@contextmanager
def error_context(what: str) -> Generator[None, None, None]:
    try:
        yield
    except SolverError as e:
        if hasattr(e, "add_note"):
            e.add_note(f"while running {what}")  # type: ignore[attr-defined]
        logger.debug("%s failed: %s", what, e)
        raise


def run_problem(
    problem_file: ProblemFile,
    n: int | None = None,
    options: SolverOptions = SolverOptions(),
) -> tuple[ProblemSpec, Solution]:
    n = problem_file.default_n if n is None else n
    problem = ProblemSpec.from_problem_file(problem_file)
    grid = GridSpec.uniform(n)
    basis = basis_for(grid, options.convention(), options.gram_tolerance)

    if options.picard_passes > 1:
        solution = picard_solve(
            problem, grid, options.picard_passes, options.picard_tolerance, basis
        )
    else:
        solution = solve(problem, grid, basis)
    return problem, solution


# Error tables


@dataclass(frozen=True)
class ErrorRow:
    t: float
    exact: float
    approx: float
    abs_err: float
    rel_err: float | None  # None when exact is 0

    @classmethod
    def compare(cls, t: float, exact: float, approx: float) -> "ErrorRow":
        abs_err = abs(exact - approx)
        return cls(t, exact, approx, abs_err, None if exact == 0.0 else abs_err / abs(exact))


@dataclass(frozen=True)
class ErrorTable:
    name: str
    n: int
    rows: tuple[ErrorRow, ...]
    convention: str
    runtime: float = 0.0
    passes: int = 1
    derivative_errors: tuple[float, float] = field(default=(0.0, 0.0))

    @property
    def max_abs_err(self) -> float:
        return max(row.abs_err for row in self.rows)

    def row_at(self, t: float) -> ErrorRow:
        return min(self.rows, key=lambda row: abs(row.t - t))


def tabulate(
    problem: ProblemSpec,
    solution: Solution,
    points: Sequence[float] = REPORTING_POINTS,
) -> ErrorTable:
    exact = problem.exact_function
    if exact is None:
        raise DomainError(f"problem {problem.name} has no exact solution to compare against")

    rows = tuple(
        ErrorRow.compare(t, float(exact(t)), evaluate_solution(solution, t)) for t in points
    )
    derivative_errors = tuple(
        max(abs(float(exact(t, order)) - evaluate_solution(solution, t, order)) for t in points)
        for order in (1, 2)
    )
    return ErrorTable(
        name=problem.name,
        n=solution.grid.n,
        rows=rows,
        convention=str(solution.basis.convention),
        runtime=solution.diagnostics.runtime,
        passes=solution.diagnostics.passes,
        derivative_errors=(derivative_errors[0], derivative_errors[1]),
    )


def run_example(
    id: int | str,
    n: int | None = None,
    options: SolverOptions = TABLE_OPTIONS,
) -> ErrorTable:
    """Solves a built-in example on n uniform nodes. By default the sweep is repeated until
    it converges, which is what the published error tables show."""
    problem_file = load_example(id)
    n = problem_file.default_n if n is None else n
    with error_context(f"{problem_file.name} with n={n}"):
        started = time.perf_counter()
        problem, solution = run_problem(problem_file, n, options)
        table = tabulate(problem, solution)

    logger.info(
        "%s, n=%d: max abs error %.3e (%.3f s, kernel %s)",
        table.name,
        n,
        table.max_abs_err,
        time.perf_counter() - started,
        table.convention,
    )
    return table


def convergence_run(
    id: int | str,
    n_list: Iterable[int],
    options: SolverOptions = TABLE_OPTIONS,
) -> list[tuple[int, float]]:
    ns = list(n_list)
    if not ns:
        raise DomainError("convergence run needs at least one n")
    return [(n, run_example(id, n, options).max_abs_err) for n in ns]


# CSV output


def format_real(x: float) -> str:
    return format(x + 0.0, ".17g")


@contextmanager
def _open_destination(destination: str | Path | TextIO) -> Generator[TextIO, None, None]:
    if not isinstance(destination, (str, Path)):
        yield destination
        return

    path = str(destination)
    if not path:
        raise OutputError(path, "empty destination path")
    try:
        f = open(destination, "w", encoding="utf-8", newline="")
    except OSError as e:
        raise OutputError(path, e.strerror or str(e)) from e
    with f:
        yield f


def _write_rows(
    destination: str | Path | TextIO,
    header: Sequence[str],
    rows: Iterable[Sequence[str]],
) -> None:
    with _open_destination(destination) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_csv(table: ErrorTable, destination: str | Path | TextIO) -> None:
    """Writes `t,exact,approx,abs_err,rel_err` rows; an undefined relative error is written as
    the literal `indeterminate`."""
    _write_rows(
        destination,
        ("t", "exact", "approx", "abs_err", "rel_err"),
        (
            (
                format_real(row.t),
                format_real(row.exact),
                format_real(row.approx),
                format_real(row.abs_err),
                "indeterminate" if row.rel_err is None else format_real(row.rel_err),
            )
            for row in table.rows
        ),
    )


def emit_solution_csv(
    solution: Solution,
    destination: str | Path | TextIO,
    points: Sequence[float] = REPORTING_POINTS,
) -> None:
    _write_rows(
        destination,
        ("t", "y", "y1", "y2"),
        (
            [format_real(t)] + [format_real(evaluate_solution(solution, t, m)) for m in range(3)]
            for t in points
        ),
    )


@dataclass(frozen=True)
class BenchRow:
    example: str
    n: int
    max_abs_err: float
    runtime: float


def bench(
    examples: Iterable[int | str],
    n_list: Iterable[int] = DEFAULT_BENCH_N,
    options: SolverOptions = TABLE_OPTIONS,
) -> list[BenchRow]:
    ns = list(n_list)
    rows = list[BenchRow]()
    for id in examples:
        for n in ns:
            table = run_example(id, n, options)
            rows.append(BenchRow(table.name, n, table.max_abs_err, table.runtime))
    return rows


def emit_bench_csv(rows: Iterable[BenchRow], destination: str | Path | TextIO) -> None:
    _write_rows(
        destination,
        ("example", "n", "max_abs_err", "runtime"),
        (
            (row.example, str(row.n), format_real(row.max_abs_err), format_real(row.runtime))
            for row in rows
        ),
    )


# Kernel diagnostics

REPRODUCING_TEST_FUNCTIONS = (
    "1",
    "sin(2*pi*t)",
    "cos(2*pi*t)",
    "t^2*(1-t)^2",
    "exp(sin(2*pi*t))",
)
REPRODUCING_SAMPLE_POINTS = (0.1, 0.37, 0.5, 0.9)


@dataclass(frozen=True)
class KernelCheckReport:
    convention: KernelConvention
    comparison: PrintedComparison
    constraint_rows: int
    condition_at_half: float
    # (function, s, s_order, residual)
    residuals: tuple[tuple[str, float, int, float], ...]

    @property
    def max_residual(self) -> float:
        return max(r[3] for r in self.residuals)

    def format(self) -> str:
        lines = [
            f"kernel convention: {self.convention.condition.value} condition, "
            f"jump sign {self.convention.jump_sign:+d}",
            f"constraint rows: {self.constraint_rows}",
            f"condition estimate at s=0.5: {self.condition_at_half:.3e}",
            f"printed vs synthesized on {self.comparison.grid}x{self.comparison.grid} grid: "
            f"max |diff| = {self.comparison.max_abs_diff:.6e} "
            f"at t={self.comparison.at_t:g}, s={self.comparison.at_s:g}",
            "reproducing residuals:",
            f"  {'function':<20} {'s':>5} {'d/ds':>4} {'residual':>12}",
        ]
        lines.extend(
            f"  {fn:<20} {s:>5g} {order:>4d} {residual:>12.3e}"
            for fn, s, order, residual in self.residuals
        )
        return "\n".join(lines) + "\n"


def kernel_check(grid: int = 21, options: SolverOptions = SolverOptions()) -> KernelCheckReport:
    convention = options.convention()
    comparison = compare_printed(grid, convention)
    logger.info(
        "Printed kernel differs from synthesized by up to %.3e", comparison.max_abs_diff
    )

    functions = [(text, UnivariateFunction(parse(text))) for text in REPRODUCING_TEST_FUNCTIONS]
    residuals = list[tuple[str, float, int, float]]()
    for s in REPRODUCING_SAMPLE_POINTS:
        kernel_slice = synthesize_kernel_at(s, convention)
        for text, fn in functions:
            for s_order in range(4):
                residuals.append((text, s, s_order, verify_reproducing(kernel_slice, fn, s_order)))

    system = assemble_constraints(0.5, convention)
    return KernelCheckReport(
        convention=convention,
        comparison=comparison,
        constraint_rows=len(system.labels),
        condition_at_half=float(np.linalg.cond(system.matrix)),
        residuals=tuple(residuals),
    )


def emit_kernel_report(report: KernelCheckReport, destination: str | Path | TextIO) -> None:
    with _open_destination(destination) as f:
        f.write(report.format())


