"""The reproducing kernel K_s(t) of the periodic space W₂⁴[0,1] and the kernel Q_s(t) of W₂¹.

K_s is synthesized at every parameter value s by solving a 19×19 linear system for the
coefficients of its two degree-7 pieces (t ≤ s and t > s) and three boundary multipliers.
The parameter derivatives ∂ₛᵏK_s (k ≤ 3) come from differentiating that system in s and
reusing its LU factorization.
"""

import logging
import math
import threading
from dataclasses import dataclass
from enum import Enum
from functools import cache
from typing import Callable, NamedTuple, Protocol

import numpy as np
import numpy.typing as npt
from numpy.polynomial import legendre
from scipy.linalg import lu_factor, lu_solve

from .errors import BCViolation, ConventionUnresolved, DomainError, SingularSystem
from .expr import UnivariateFunction
from .parser import parse
from .polynomial import FloatArray, PiecewisePolynomial, Polynomial, poly_eval
from .printed_kernel import printed_kernel_eval

logger = logging.getLogger(__name__)

SIZE = 19
DEGREE = 7
MAX_S_ORDER = 3
CONDITION_WARNING_THRESHOLD = 1e12
RESOLUTION_TOLERANCE = 1e-4
PERIODICITY_TOLERANCE = 1e-10

# Unknowns: a₀..a₇ (t ≤ s), b₀..b₇ (t > s), c₁, c₂, c₃
A_OFFSET = 0
B_OFFSET = DEGREE + 1
C_OFFSET = 2 * (DEGREE + 1)

GAUSS_NODES, GAUSS_WEIGHTS = legendre.leggauss(16)
QUADRATURE_INTERVALS = 32


class FourthOrderCondition(Enum):
    PRINTED = "printed"  # ∂ₜ⁵K_s(0) − ∂ₜ⁴K_s(0) = 0
    ADJOINT = "adjoint"  # ∂ₜ³K_s(0) − ∂ₜ⁴K_s(0) = 0


class KernelConvention(NamedTuple):
    jump_sign: int
    condition: FourthOrderCondition

    def __str__(self) -> str:
        return f"{self.condition.value}/{self.jump_sign:+d}"


class SmoothFunction(Protocol):
    def __call__(self, t: float | FloatArray, order: int = 0) -> float | FloatArray: ...


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    s: float
    matrix: FloatArray
    rhs: FloatArray
    matrix_s_derivs: tuple[FloatArray, FloatArray, FloatArray]
    rhs_s_derivs: tuple[FloatArray, FloatArray, FloatArray]
    labels: tuple[str, ...]


def _monomial_row(point: float, t_order: int, s_order: int, at_s: bool) -> FloatArray:
    row = np.zeros(DEGREE + 1)
    if not at_s and s_order > 0:
        return row  # boundary rows don't depend on s
    total = t_order + s_order if at_s else t_order
    for i in range(total, DEGREE + 1):
        row[i] = math.perm(i, total) * point ** (i - total)
    return row


class _RowBuilder:
    def __init__(self, s: float, s_order: int) -> None:
        self.s = s
        self.s_order = s_order
        self.rows = list[FloatArray]()
        self.labels = list[str]()

    def add(self, label: str, *terms: tuple[str, float, int, float]) -> None:
        """Adds a row Σ weight·∂ₜᵐ(piece)(point), with `piece` in {"a", "b"} and point either
        a boundary (0.0/1.0) or NaN for t = s. Multiplier terms use piece "c1".."c3"."""
        row = np.zeros(SIZE)
        for piece, point, m, weight in terms:
            if piece.startswith("c"):
                if self.s_order == 0:
                    row[C_OFFSET + int(piece[1]) - 1] += weight
                continue
            offset = A_OFFSET if piece == "a" else B_OFFSET
            at_s = math.isnan(point)
            row[offset : offset + DEGREE + 1] += weight * _monomial_row(
                self.s if at_s else point, m, self.s_order, at_s
            )
        self.rows.append(row)
        self.labels.append(label)

    def matrix(self) -> FloatArray:
        return np.vstack(self.rows)


_AT_S = math.nan


def _build_rows(builder: _RowBuilder, convention: KernelConvention) -> None:
    for m in range(3):
        builder.add(f"periodic[{m}]", ("a", 0.0, m, 1.0), ("b", 1.0, m, -1.0))

    builder.add("d4K(1)", ("b", 1.0, 4, 1.0))
    if convention.condition is FourthOrderCondition.PRINTED:
        builder.add("d5K(0)-d4K(0)", ("a", 0.0, 5, 1.0), ("a", 0.0, 4, -1.0))
    else:
        builder.add("d3K(0)-d4K(0)", ("a", 0.0, 3, 1.0), ("a", 0.0, 4, -1.0))
    builder.add("K(0)+d7K(0)+c1", ("a", 0.0, 0, 1.0), ("a", 0.0, 7, 1.0), ("c1", 0.0, 0, 1.0))
    builder.add("d7K(1)+c1", ("b", 1.0, 7, 1.0), ("c1", 0.0, 0, 1.0))
    builder.add("d6K(1)-c2", ("b", 1.0, 6, 1.0), ("c2", 0.0, 0, -1.0))
    builder.add("dK(0)-d6K(0)+c2", ("a", 0.0, 1, 1.0), ("a", 0.0, 6, -1.0), ("c2", 0.0, 0, 1.0))
    builder.add("d2K(0)+d5K(0)+c3", ("a", 0.0, 2, 1.0), ("a", 0.0, 5, 1.0), ("c3", 0.0, 0, 1.0))
    builder.add("d5K(1)+c3", ("b", 1.0, 5, 1.0), ("c3", 0.0, 0, 1.0))

    for m in range(DEGREE):
        builder.add(f"smooth[{m}]", ("b", _AT_S, m, 1.0), ("a", _AT_S, m, -1.0))

    builder.add("jump", ("b", _AT_S, DEGREE, 1.0), ("a", _AT_S, DEGREE, -1.0))


def assemble_constraints(s: float, convention: KernelConvention | None = None) -> ConstraintSystem:
    """Assembles A(s)x = b(s) and the analytic s-derivatives of A and b up to order 3.

    Rows: 3 periodicity rows, 8 boundary rows from the adjoint boundary conditions,
    7 smoothness rows at t = s and the unit jump of ∂ₜ⁷K_s at t = s.
    """
    if not 0.0 <= s <= 1.0:
        raise DomainError(f"s={s!r} is outside [0, 1]")
    if convention is None:
        convention = resolve_convention()

    matrices = list[FloatArray]()
    labels: tuple[str, ...] = ()
    for s_order in range(MAX_S_ORDER + 1):
        builder = _RowBuilder(s, s_order)
        _build_rows(builder, convention)
        matrices.append(builder.matrix())
        labels = tuple(builder.labels)

    rhs = np.zeros(SIZE)
    rhs[-1] = convention.jump_sign
    zero = np.zeros(SIZE)

    for m in matrices:
        m.flags.writeable = False
    rhs.flags.writeable = False
    zero.flags.writeable = False

    return ConstraintSystem(
        s=s,
        matrix=matrices[0],
        rhs=rhs,
        matrix_s_derivs=(matrices[1], matrices[2], matrices[3]),
        rhs_s_derivs=(zero, zero, zero),
        labels=labels,
    )


@dataclass(frozen=True, eq=False)
class KernelSlice:
    """K(·, s) at a fixed s: `pieces[k]` is the (t ≤ s, t > s) pair of polynomials in t
    representing ∂ₛᵏK(t, s)."""

    s: float
    pieces: tuple[tuple[Polynomial, Polynomial], ...]
    multipliers: tuple[float, float, float]
    convention: KernelConvention
    condition: float

    def piece(self, t: float, s_order: int = 0) -> Polynomial:
        left, right = self.pieces[s_order]
        return left if t <= self.s else right

    def as_piecewise(self, s_order: int = 0) -> PiecewisePolynomial:
        if not 0 <= s_order <= MAX_S_ORDER:
            raise DomainError(f"s-derivative order must be in 0..{MAX_S_ORDER}, got {s_order}")
        left, right = self.pieces[s_order]
        return PiecewisePolynomial.split_at(self.s, left, right)

    def jump(self, t_order: int = DEGREE) -> float:
        left, right = self.pieces[0]
        return poly_eval(right, self.s, t_order) - poly_eval(left, self.s, t_order)


def synthesize_kernel_at(s: float, convention: KernelConvention | None = None) -> KernelSlice:
    if convention is None:
        convention = resolve_convention()
    system = assemble_constraints(s, convention)

    lu, pivots = lu_factor(system.matrix)
    diagonal = np.abs(np.diag(lu))
    if diagonal.min() <= SIZE * np.finfo(float).eps * diagonal.max():
        raise SingularSystem(
            f"kernel constraint system is singular at s={s!r} "
            f"(smallest pivot {diagonal.min():.3e})"
        )

    condition = float(np.linalg.cond(system.matrix))
    if condition > CONDITION_WARNING_THRESHOLD:
        logger.warning("Kernel constraint system at s=%r is ill-conditioned: %.3e", s, condition)

    a1, a2, a3 = system.matrix_s_derivs
    b1, b2, b3 = system.rhs_s_derivs
    x0 = lu_solve((lu, pivots), system.rhs)
    x1 = lu_solve((lu, pivots), b1 - a1 @ x0)
    x2 = lu_solve((lu, pivots), b2 - 2 * a1 @ x1 - a2 @ x0)
    x3 = lu_solve((lu, pivots), b3 - 3 * a1 @ x2 - 3 * a2 @ x1 - a3 @ x0)

    # K(0, s) = 1 for every s: the s-derivatives vanish at t = 0
    for x in (x1, x2, x3):
        x[A_OFFSET] = 0.0
        if s == 0.0:
            x[B_OFFSET] = 0.0

    pieces = tuple(
        (
            Polynomial(x[A_OFFSET : A_OFFSET + DEGREE + 1]),
            Polynomial(x[B_OFFSET : B_OFFSET + DEGREE + 1]),
        )
        for x in (x0, x1, x2, x3)
    )
    c1, c2, c3 = (float(c) for c in x0[C_OFFSET:])
    return KernelSlice(s, pieces, (c1, c2, c3), convention, condition)


def kernel_eval(slice: KernelSlice, t: float, t_order: int = 0, s_order: int = 0) -> float:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t!r} is outside [0, 1]")
    if not 0 <= t_order <= DEGREE:
        raise DomainError(f"t-derivative order must be in 0..{DEGREE}, got {t_order}")
    if not 0 <= s_order <= MAX_S_ORDER:
        raise DomainError(f"s-derivative order must be in 0..{MAX_S_ORDER}, got {s_order}")
    return poly_eval(slice.piece(t, s_order), t, t_order)


def q_kernel_eval(t: float, s: float) -> float:
    if not (0.0 <= t <= 1.0 and 0.0 <= s <= 1.0):
        raise DomainError(f"(t, s) = ({t!r}, {s!r}) is outside [0, 1]²")
    return 1.0 + t if t <= s else 1.0 + s


def quadrature_points(breakpoints: tuple[float, ...]) -> tuple[FloatArray, FloatArray]:
    """Composite 16-point Gauss-Legendre rule on 32 uniform subintervals of [0, 1], with the
    additional interior breakpoints inserted."""
    cuts = np.union1d(np.linspace(0.0, 1.0, QUADRATURE_INTERVALS + 1), breakpoints)
    left, right = cuts[:-1], cuts[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    points = (mid[:, None] + half[:, None] * GAUSS_NODES[None, :]).ravel()
    weights = (half[:, None] * GAUSS_WEIGHTS[None, :]).ravel()
    return points, weights


def verify_reproducing(slice: KernelSlice, test_fn: SmoothFunction, s_order: int = 0) -> float:
    """Returns |⟨y, ∂ₛᵏK_s⟩ − y⁽ᵏ⁾(s)| for y = test_fn and k = s_order, with the W₂⁴ inner
    product Σᵢ₌₀³ y⁽ⁱ⁾(0)z⁽ⁱ⁾(0) + ∫₀¹ y⁽⁴⁾z⁽⁴⁾."""
    for m in range(3):
        gap = abs(float(test_fn(0.0, m)) - float(test_fn(1.0, m)))
        if gap > PERIODICITY_TOLERANCE:
            raise BCViolation(
                f"test function is not periodic in derivative {m} (|y(0) - y(1)| = {gap:.3e})"
            )

    kernel = slice.as_piecewise(s_order)
    boundary = sum(
        float(test_fn(0.0, i)) * kernel_eval(slice, 0.0, i, s_order) for i in range(4)
    )

    points, weights = quadrature_points(kernel.breakpoints)
    integrand = np.asarray(test_fn(points, 4)) * kernel.evaluate_many(points, 4)
    inner = boundary + float(weights @ integrand)
    return abs(inner - float(test_fn(slice.s, s_order)))


# Convention resolution

PROBE_POINTS: tuple[tuple[str, float], ...] = (
    ("sin(2*pi*t)", 0.5),
    ("cos(2*pi*t)", 0.5),
    ("t^2*(1-t)^2", 0.3),
)


def _probes() -> list[tuple[SmoothFunction, float]]:
    return [(UnivariateFunction(parse(text)), s) for text, s in PROBE_POINTS]


def candidate_conventions(
    condition: FourthOrderCondition | None = None,
) -> list[KernelConvention]:
    variants = list(FourthOrderCondition) if condition is None else [condition]
    return [KernelConvention(sign, variant) for variant in variants for sign in (-1, 1)]


@cache
def _resolve_convention(condition: FourthOrderCondition | None) -> KernelConvention:
    probes = _probes()
    for convention in candidate_conventions(condition):
        try:
            residuals = [
                verify_reproducing(synthesize_kernel_at(s, convention), fn) for fn, s in probes
            ]
        except SingularSystem as e:
            logger.warning("Kernel convention %s rejected: %s", convention, e)
            continue

        worst = max(residuals)
        if worst <= RESOLUTION_TOLERANCE:
            logger.info("Kernel convention resolved: %s (probe residual %.3e)", convention, worst)
            return convention
        logger.warning(
            "Kernel convention %s rejected: reproducing residual %.3e exceeds %.0e",
            convention,
            worst,
            RESOLUTION_TOLERANCE,
        )

    raise ConventionUnresolved(
        "no kernel convention reproduces the probe functions"
        + ("" if condition is None else f" with the {condition.value} condition")
    )


_resolution_lock = threading.Lock()


def resolve_convention(condition: FourthOrderCondition | None = None) -> KernelConvention:
    """Picks the first boundary-condition variant and jump sign whose kernel passes the
    reproducing-property probes. The outcome is computed once per process and variant."""
    with _resolution_lock:
        return _resolve_convention(condition)


# Comparison with the published coefficient lists


@dataclass(frozen=True)
class PrintedComparison:
    grid: int
    max_abs_diff: float
    at_t: float
    at_s: float


def compare_printed(
    grid: int = 21,
    convention: KernelConvention | None = None,
    printed: Callable[[float, float], float] = printed_kernel_eval,
) -> PrintedComparison:
    if grid < 2:
        raise DomainError(f"comparison grid needs at least 2 points, got {grid}")
    nodes: npt.NDArray[np.float64] = np.linspace(0.0, 1.0, grid)
    worst = (-1.0, 0.0, 0.0)
    for s in nodes:
        kernel_slice = synthesize_kernel_at(float(s), convention)
        for t in nodes:
            diff = abs(printed(float(t), float(s)) - kernel_eval(kernel_slice, float(t)))
            if not diff <= worst[0]:
                worst = (diff, float(t), float(s))
    return PrintedComparison(grid, *worst)
