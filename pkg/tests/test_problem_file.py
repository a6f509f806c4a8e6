from pathlib import Path

import pytest
from impuls.errors import MultipleDataErrors

from periodic_rk.errors import BCViolation, ProblemFileError
from periodic_rk.expr import Number, eval_ast
from periodic_rk.problem_file import (
    DEFAULT_N,
    evaluate_anchor,
    load_problem_file,
    parse_problem_text,
)

EXAMPLE_1 = """\
# third-order problem with a first-derivative-free coupling
name = example1
lhs_extra = t*y2                # G(t, y, y', y'')
forcing = manufactured
exact = exp(t^2*(t-1)^2)

default_n = 51
"""


def test_parses_entries_and_comments() -> None:
    problem = parse_problem_text(EXAMPLE_1, "example1.txt")
    assert problem.name == "example1"
    assert problem.manufactured
    assert problem.default_n == 51
    assert problem.source == "example1.txt"
    assert eval_ast(problem.lhs_extra, {"t": 2.0, "y2": 3.0}) == 6.0
    assert problem.exact is not None
    assert eval_ast(problem.exact, {"t": 0.0}) == 1.0


def test_explicit_forcing_and_defaults() -> None:
    problem = parse_problem_text("name = p\nlhs_extra = y\nforcing = cos(2*pi*t)\n")
    assert not problem.manufactured
    assert problem.exact is None
    assert problem.anchor is None
    assert problem.default_n == DEFAULT_N


def test_duplicate_key() -> None:
    with pytest.raises(ProblemFileError, match="duplicate key 'name'") as info:
        parse_problem_text("name = a\nname = b\nlhs_extra = 0\nforcing = 0\n", "dup.txt")
    assert info.value.line == 2


def test_unknown_key() -> None:
    with pytest.raises(ProblemFileError, match="unknown key 'rhs'") as info:
        parse_problem_text("name = a\nlhs_extra = 0\nforcing = 0\nrhs = t\n")
    assert info.value.line == 4


def test_every_bad_line_is_reported() -> None:
    text = "name = a\nlhs_extra = t +\nforcing = sin(\ndefault_n = 10\n"
    with pytest.raises(MultipleDataErrors) as info:
        parse_problem_text(text, "bad.txt")

    errors = info.value.errors
    assert [e.line for e in errors if isinstance(e, ProblemFileError)] == [2, 3]
    assert [str(e).split(": ")[0] for e in errors] == ["bad.txt:2", "bad.txt:3"]


def test_parse_error_carries_line() -> None:
    with pytest.raises(ProblemFileError) as info:
        parse_problem_text("name = a\n\n# comment\nlhs_extra = 2 3\nforcing = 0\n", "p.txt")
    assert info.value.line == 4
    assert "offset 2" in str(info.value)


def test_missing_required_key() -> None:
    with pytest.raises(ProblemFileError, match="forcing"):
        parse_problem_text("name = a\nlhs_extra = 0\n")


def test_line_without_equals_sign() -> None:
    with pytest.raises(ProblemFileError, match="key = value"):
        parse_problem_text("name = a\nlhs_extra 0\nforcing = 0\n")


def test_manufactured_forcing_needs_exact() -> None:
    with pytest.raises(ProblemFileError, match="requires an exact solution"):
        parse_problem_text("name = a\nlhs_extra = y\nforcing = manufactured\n")


def test_third_derivative_not_allowed_in_lhs() -> None:
    with pytest.raises(ProblemFileError, match="y3"):
        parse_problem_text("name = a\nlhs_extra = y3*t\nforcing = 0\n")


def test_forcing_must_depend_on_t_only() -> None:
    with pytest.raises(ProblemFileError, match="t only"):
        parse_problem_text("name = a\nlhs_extra = y\nforcing = y1\n")


def test_non_periodic_exact_solution() -> None:
    with pytest.raises(BCViolation, match="derivative 0"):
        parse_problem_text("name = a\nlhs_extra = 0\nforcing = manufactured\nexact = t\n")


def test_exact_solution_periodic_in_value_only() -> None:
    # t^2 - t vanishes at both ends but its slope does not match
    with pytest.raises(BCViolation, match="derivative 1"):
        parse_problem_text("name = a\nlhs_extra = 0\nforcing = manufactured\nexact = t^2 - t\n")


def test_validation_errors_are_collected() -> None:
    text = "name = a\nlhs_extra = y3\nforcing = y\nanchor = t\n"
    with pytest.raises(MultipleDataErrors) as info:
        parse_problem_text(text)
    assert len(info.value.errors) == 3


def test_anchor_values() -> None:
    constant = parse_problem_text("name = a\nlhs_extra = y\nforcing = 0\nanchor = 2*pi\n")
    assert evaluate_anchor(constant) == pytest.approx(6.283185307179586)

    unset = parse_problem_text("name = a\nlhs_extra = y\nforcing = 0\n")
    assert evaluate_anchor(unset) == 0.0

    from_exact = parse_problem_text(EXAMPLE_1)
    assert evaluate_anchor(from_exact) == 1.0

    explicit = parse_problem_text(EXAMPLE_1 + "anchor = -0.5\n")
    assert explicit.anchor == Number(-0.5)
    assert evaluate_anchor(explicit) == -0.5


def test_anchor_exact_needs_exact() -> None:
    with pytest.raises(ProblemFileError, match="anchor"):
        parse_problem_text("name = a\nlhs_extra = y\nforcing = 0\nanchor = exact\n")


@pytest.mark.parametrize("value", ["1", "-3", "ten"])
def test_invalid_default_n(value: str) -> None:
    with pytest.raises(ProblemFileError, match="default_n"):
        parse_problem_text(f"name = a\nlhs_extra = y\nforcing = 0\ndefault_n = {value}\n")


def test_load_problem_file(tmp_path: Path) -> None:
    path = tmp_path / "problem.txt"
    path.write_text(EXAMPLE_1, encoding="utf-8")
    problem = load_problem_file(path)
    assert problem.name == "example1"
    assert problem.source == str(path)


def test_load_missing_problem_file(tmp_path: Path) -> None:
    with pytest.raises(ProblemFileError, match="cannot read"):
        load_problem_file(tmp_path / "missing.txt")
