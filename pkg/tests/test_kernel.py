import numpy as np
import pytest

from periodic_rk.errors import BCViolation, ConventionUnresolved, DomainError
from periodic_rk.expr import UnivariateFunction
from periodic_rk.kernel import (
    B_OFFSET,
    SIZE,
    FourthOrderCondition,
    KernelConvention,
    KernelSlice,
    assemble_constraints,
    candidate_conventions,
    compare_printed,
    kernel_eval,
    q_kernel_eval,
    resolve_convention,
    synthesize_kernel_at,
    verify_reproducing,
)
from periodic_rk.parser import parse
from periodic_rk.printed_kernel import PRINTED_TABLE, printed_kernel_eval

SAMPLED_S = tuple(np.linspace(0.0, 1.0, 20))


@pytest.fixture(scope="module")
def slices(convention: KernelConvention) -> dict[float, KernelSlice]:
    return {s: synthesize_kernel_at(s, convention) for s in (i / 20 for i in range(21))}


def test_convention_resolves_to_adjoint_with_positive_jump(convention: KernelConvention) -> None:
    assert convention == KernelConvention(1, FourthOrderCondition.ADJOINT)
    assert str(convention) == "adjoint/+1"


def test_printed_condition_reproduces_nothing() -> None:
    with pytest.raises(ConventionUnresolved, match="printed"):
        resolve_convention(FourthOrderCondition.PRINTED)


def test_candidate_order() -> None:
    assert [str(c) for c in candidate_conventions()] == [
        "printed/-1",
        "printed/+1",
        "adjoint/-1",
        "adjoint/+1",
    ]


def test_constraint_rows(convention: KernelConvention) -> None:
    system = assemble_constraints(0.4, convention)
    assert system.matrix.shape == (SIZE, SIZE)
    assert len(system.labels) == SIZE
    assert system.labels[:3] == ("periodic[0]", "periodic[1]", "periodic[2]")
    assert "d3K(0)-d4K(0)" in system.labels
    assert system.labels[-1] == "jump"

    jump = system.matrix[-1]
    assert jump[7] == -5040.0
    assert jump[B_OFFSET + 7] == 5040.0
    assert system.rhs[-1] == 1.0
    assert not system.rhs[:-1].any()

    # a(0) − b(1): a₀ − Σ bᵢ
    assert system.matrix[0, 0] == 1.0
    assert system.matrix[0, B_OFFSET : B_OFFSET + 8].tolist() == [-1.0] * 8


def test_constraint_arrays_are_read_only(convention: KernelConvention) -> None:
    system = assemble_constraints(0.4, convention)
    with pytest.raises(ValueError):
        system.matrix[0, 0] = 2.0


def test_boundary_rows_do_not_depend_on_s(convention: KernelConvention) -> None:
    system = assemble_constraints(0.3, convention)
    boundary = [
        i for i, label in enumerate(system.labels) if not label.startswith(("smooth", "jump"))
    ]
    for derivative in system.matrix_s_derivs:
        assert not derivative[boundary].any()


@pytest.mark.parametrize("s", np.linspace(0.0, 1.0, 10))
def test_constraint_matrix_has_full_rank(s: float, convention: KernelConvention) -> None:
    assert np.linalg.matrix_rank(assemble_constraints(float(s), convention).matrix) == SIZE


def test_s_outside_interval(convention: KernelConvention) -> None:
    with pytest.raises(DomainError):
        assemble_constraints(1.5, convention)


def test_kernel_at_zero_is_one(slices: dict[float, KernelSlice]) -> None:
    assert kernel_eval(slices[0.3], 0.0) == pytest.approx(1.0, abs=1e-12)

    at_zero = slices[0.0]
    for t in (0.0, 0.25, 1.0):
        assert kernel_eval(at_zero, t) == pytest.approx(1.0, abs=1e-12)
    assert at_zero.pieces[0][1].coeffs == pytest.approx([1.0] + [0.0] * 7, abs=1e-12)


def test_s_derivatives_vanish_at_zero(slices: dict[float, KernelSlice]) -> None:
    for s, kernel_slice in slices.items():
        for s_order in (1, 2, 3):
            assert kernel_eval(kernel_slice, 0.0, 0, s_order) == 0.0, (s, s_order)
            assert kernel_slice.as_piecewise(s_order)(0.0) == 0.0, (s, s_order)


def test_symmetry(slices: dict[float, KernelSlice]) -> None:
    grid = sorted(slices)
    for s in grid:
        for t in grid:
            assert abs(kernel_eval(slices[s], t) - kernel_eval(slices[t], s)) <= 1e-9


def test_symmetry_with_independent_synthesis(convention: KernelConvention) -> None:
    a = kernel_eval(synthesize_kernel_at(0.7, convention), 0.2)
    b = kernel_eval(synthesize_kernel_at(0.2, convention), 0.7)
    assert a == pytest.approx(b, abs=1e-9)


def test_seventh_derivative_jump(slices: dict[float, KernelSlice]) -> None:
    for s, kernel_slice in slices.items():
        assert kernel_slice.jump() == pytest.approx(1.0, abs=1e-6), s


def test_smoothness_across_diagonal(slices: dict[float, KernelSlice]) -> None:
    for s, kernel_slice in slices.items():
        for order in range(7):
            assert abs(kernel_slice.jump(order)) <= 1e-7, (s, order)


def test_periodic_in_t(slices: dict[float, KernelSlice]) -> None:
    for s, kernel_slice in slices.items():
        for order in range(3):
            at_0 = kernel_eval(kernel_slice, 0.0, order)
            at_1 = kernel_eval(kernel_slice, 1.0, order)
            assert abs(at_0 - at_1) <= 1e-9, (s, order)


def test_continuity_near_diagonal(convention: KernelConvention) -> None:
    s = 0.4
    kernel_slice = synthesize_kernel_at(s, convention)
    for order in range(7):
        below = kernel_eval(kernel_slice, s - 1e-9, order)
        above = kernel_eval(kernel_slice, s + 1e-9, order)
        assert below == pytest.approx(above, abs=1e-6), order


@pytest.mark.parametrize(
    "t, t_order, s_order",
    [(-0.1, 0, 0), (1.1, 0, 0), (0.5, 8, 0), (0.5, -1, 0), (0.5, 0, 4)],
)
def test_kernel_eval_domain(
    slices: dict[float, KernelSlice], t: float, t_order: int, s_order: int
) -> None:
    with pytest.raises(DomainError):
        kernel_eval(slices[0.5], t, t_order, s_order)


def test_q_kernel() -> None:
    assert q_kernel_eval(0.2, 0.5) == pytest.approx(1.2)
    assert q_kernel_eval(0.8, 0.5) == 1.5
    assert q_kernel_eval(0.5, 0.5) == 1.5
    with pytest.raises(DomainError):
        q_kernel_eval(0.5, 1.2)


def test_reproduces_constants(
    slices: dict[float, KernelSlice], periodic_functions: dict[str, UnivariateFunction]
) -> None:
    for kernel_slice in slices.values():
        assert verify_reproducing(kernel_slice, periodic_functions["1"]) <= 1e-12


def test_reproduces_sine(
    convention: KernelConvention, periodic_functions: dict[str, UnivariateFunction]
) -> None:
    residual = verify_reproducing(
        synthesize_kernel_at(0.37, convention), periodic_functions["sin(2*pi*t)"]
    )
    assert residual <= 1e-8


@pytest.mark.parametrize("s", [0.1, 0.5, 0.9])
def test_reproduces_polynomial(
    s: float, convention: KernelConvention, periodic_functions: dict[str, UnivariateFunction]
) -> None:
    fn = periodic_functions["t^2*(1-t)^2"]
    residual = verify_reproducing(synthesize_kernel_at(s, convention), fn)
    assert residual <= 1e-9


def test_reproducing_property(
    convention: KernelConvention, periodic_functions: dict[str, UnivariateFunction]
) -> None:
    for s in SAMPLED_S:
        kernel_slice = synthesize_kernel_at(float(s), convention)
        for text, fn in periodic_functions.items():
            assert verify_reproducing(kernel_slice, fn) <= 1e-7, (text, s)


@pytest.mark.parametrize("s_order", [1, 2, 3])
def test_derivative_reproducing_property(
    s_order: int,
    convention: KernelConvention,
    periodic_functions: dict[str, UnivariateFunction],
) -> None:
    for s in SAMPLED_S:
        kernel_slice = synthesize_kernel_at(float(s), convention)
        for text, fn in periodic_functions.items():
            scale = max(1.0, abs(float(fn(float(s), s_order))))
            assert verify_reproducing(kernel_slice, fn, s_order) <= 1e-6 * scale, (text, s)


def test_reproducing_rejects_non_periodic_function(slices: dict[float, KernelSlice]) -> None:
    with pytest.raises(BCViolation):
        verify_reproducing(slices[0.5], UnivariateFunction(parse("t")))


@pytest.mark.parametrize("t", [0.1, 0.8])
@pytest.mark.parametrize("s_order", [1, 2, 3])
def test_s_derivatives_match_finite_differences(
    t: float, s_order: int, convention: KernelConvention
) -> None:
    s, h = 0.4, 1e-5
    above = kernel_eval(synthesize_kernel_at(s + h, convention), t, 0, s_order - 1)
    below = kernel_eval(synthesize_kernel_at(s - h, convention), t, 0, s_order - 1)
    central = (above - below) / (2 * h)
    analytic = kernel_eval(synthesize_kernel_at(s, convention), t, 0, s_order)
    assert analytic == pytest.approx(central, rel=1e-4, abs=1e-8)


def test_printed_table_constants() -> None:
    assert PRINTED_TABLE.a[0](0.6) == 1.0
    assert PRINTED_TABLE.b[0](1.0) == pytest.approx(1.0 - 1 / 5040)
    # a₃ and a₄ are printed identically
    assert PRINTED_TABLE.a[3].coeffs * PRINTED_TABLE.alpha[2] == pytest.approx(
        PRINTED_TABLE.a[4].coeffs * PRINTED_TABLE.alpha[3]
    )
    assert len(PRINTED_TABLE.t_coefficients(0.5, left=True)) == 8


def test_printed_kernel_domain() -> None:
    with pytest.raises(DomainError):
        printed_kernel_eval(1.5, 0.5)
    with pytest.raises(DomainError):
        printed_kernel_eval(0.5, 0.5, 8)


def test_compare_printed(convention: KernelConvention) -> None:
    comparison = compare_printed(5, convention)
    assert comparison.grid == 5
    assert np.isfinite(comparison.max_abs_diff)
    assert comparison.max_abs_diff >= 0.0
    assert 0.0 <= comparison.at_t <= 1.0
    assert 0.0 <= comparison.at_s <= 1.0


def test_compare_printed_against_itself(convention: KernelConvention) -> None:
    def synthesized(t: float, s: float) -> float:
        return kernel_eval(synthesize_kernel_at(s, convention), t)

    assert compare_printed(4, convention, synthesized).max_abs_diff == 0.0
