import io
import math
from pathlib import Path

import pytest

from periodic_rk.basis import BasisSet, GridSpec
from periodic_rk.errors import DomainError, InputError, OutputError
from periodic_rk.harness import (
    REPORTING_POINTS,
    TABLE_OPTIONS,
    ErrorRow,
    ErrorTable,
    bench,
    convergence_run,
    emit_bench_csv,
    emit_csv,
    emit_solution_csv,
    format_real,
    kernel_check,
    load_example,
    resolve_problem,
    run_example,
    tabulate,
)
from periodic_rk.options import SolverOptions
from periodic_rk.parser import parse
from periodic_rk.solver import ProblemSpec, solve


def csv_text(table: ErrorTable) -> str:
    out = io.StringIO()
    emit_csv(table, out)
    return out.getvalue()


def test_examples_load() -> None:
    assert [load_example(i).default_n for i in (1, 2, 3)] == [51, 36, 26]
    assert load_example("example2").name == "example2"
    assert resolve_problem("example3").manufactured


def test_unknown_example() -> None:
    with pytest.raises(InputError, match="example4"):
        load_example(4)


def test_format_real() -> None:
    assert format_real(0.0) == "0"
    assert format_real(-0.0) == "0"
    assert format_real(0.5) == "0.5"
    assert format_real(1.0644944589178593) == "1.0644944589178593"


def test_error_row() -> None:
    row = ErrorRow.compare(0.5, 2.0, 1.5)
    assert (row.abs_err, row.rel_err) == (0.5, 0.25)
    assert ErrorRow.compare(0.0, 0.0, 1e-9).rel_err is None


def test_indeterminate_row_text() -> None:
    table = ErrorTable("example2", 36, (ErrorRow.compare(0.0, 0.0, 0.0),), "adjoint/+1")
    assert csv_text(table) == "t,exact,approx,abs_err,rel_err\n0,0,0,0,indeterminate\n"


@pytest.fixture(scope="module")
def table1() -> ErrorTable:
    return run_example(1, 11)


def test_error_table_columns(table1: ErrorTable) -> None:
    assert [row.t for row in table1.rows] == list(REPORTING_POINTS)
    assert table1.row_at(0.5).exact == pytest.approx(1.0644944589178593, rel=1e-15)
    assert table1.row_at(0.2).exact == pytest.approx(1.0259304941903822, rel=1e-15)
    for row in table1.rows:
        assert row.abs_err == abs(row.exact - row.approx)
        assert math.isfinite(row.approx)
    assert table1.convention == "adjoint/+1"
    assert table1.n == 11


def test_csv_layout(table1: ErrorTable) -> None:
    text = csv_text(table1)
    lines = text.split("\n")
    assert lines[0] == "t,exact,approx,abs_err,rel_err"
    assert len(lines) == 13 and lines[-1] == ""
    assert lines[6].startswith("0.5,1.06449445891785")


def test_example2_boundary_rows_are_indeterminate() -> None:
    table = run_example(2, 11)
    assert table.row_at(0.0).rel_err is None
    assert table.row_at(1.0).rel_err is None
    assert all(row.rel_err is not None for row in table.rows[1:-1])
    assert csv_text(table).count("indeterminate") == 2


def test_csv_is_deterministic() -> None:
    assert csv_text(run_example(2, 11)) == csv_text(run_example(2, 11))


def test_csv_to_file(table1: ErrorTable, tmp_path: Path) -> None:
    path = tmp_path / "table.csv"
    emit_csv(table1, path)
    assert path.read_bytes() == csv_text(table1).encode()


def test_empty_destination(table1: ErrorTable) -> None:
    with pytest.raises(OutputError, match="''"):
        emit_csv(table1, "")


def test_unwritable_destination(table1: ErrorTable, tmp_path: Path) -> None:
    path = tmp_path / "missing" / "table.csv"
    with pytest.raises(OutputError) as info:
        emit_csv(table1, path)
    assert info.value.path == str(path)


def test_tabulate_needs_exact_solution(basis11: BasisSet) -> None:
    problem = ProblemSpec("zero", parse("y"), parse("0"))
    solution = solve(problem, GridSpec.uniform(11), basis11)
    with pytest.raises(DomainError):
        tabulate(problem, solution)

    out = io.StringIO()
    emit_solution_csv(solution, out)
    lines = out.getvalue().splitlines()
    assert lines[0] == "t,y,y1,y2"
    assert lines[1] == "0,0,0,0"
    assert len(lines) == 12


def test_convergence_run_single_entry(table1: ErrorTable) -> None:
    assert convergence_run(1, [11]) == [(11, table1.max_abs_err)]


def test_bench() -> None:
    rows = bench([1], [11])
    assert [(row.example, row.n) for row in rows] == [("example1", 11)]

    out = io.StringIO()
    emit_bench_csv(rows, out)
    header, line = out.getvalue().splitlines()
    assert header == "example,n,max_abs_err,runtime"
    assert line.startswith("example1,11,")


def test_kernel_check_report() -> None:
    report = kernel_check(5)
    assert str(report.convention) == "adjoint/+1"
    assert report.constraint_rows == 19
    assert report.comparison.grid == 5
    assert len(report.residuals) == 4 * 5 * 4
    assert report.max_residual <= 1e-4

    text = report.format()
    assert "jump sign +1" in text
    assert "constraint rows: 19" in text
    assert "reproducing residuals:" in text


# Published accuracy


def test_tables_iterate_to_convergence(table1: ErrorTable) -> None:
    assert TABLE_OPTIONS.picard_passes > 1
    assert table1.passes > 1


def test_single_sweep_table() -> None:
    table = run_example(1, 11, SolverOptions())
    assert table.passes == 1
    assert math.isfinite(table.max_abs_err)


@pytest.mark.slow
def test_example1_accuracy() -> None:
    table = run_example(1, 51)
    assert table.max_abs_err <= 2.1e-5
    assert abs(table.row_at(0.5).approx - 1.0644944589178593) <= 1e-5


@pytest.mark.slow
def test_example2_accuracy() -> None:
    table = run_example(2, 36)
    assert table.max_abs_err <= 1.8e-6
    assert table.row_at(0.0).rel_err is None
    assert table.row_at(1.0).rel_err is None


@pytest.mark.slow
def test_example3_accuracy() -> None:
    assert run_example(3, 26).max_abs_err <= 2.3e-5


@pytest.mark.slow
@pytest.mark.parametrize("id", [1, 2, 3])
def test_error_decreases_with_n(id: int) -> None:
    errors = [error for _, error in convergence_run(id, [11, 26, 51])]
    assert errors[0] >= errors[1] >= errors[2]


@pytest.mark.slow
@pytest.mark.parametrize("id", [1, 2, 3])
def test_derivative_errors_decrease_with_n(id: int) -> None:
    coarse = run_example(id, 11).derivative_errors
    fine = run_example(id, 51).derivative_errors
    assert fine[0] < coarse[0]
    assert fine[1] < coarse[1]
