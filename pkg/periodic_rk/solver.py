"""The n-term iterative solution of y''' = F(t, y, y', y'') under periodic conditions.

The approximation is y_n(t) = c + Σᵢ Aᵢψ̄ᵢ(t), where ψ̄ᵢ = Σ_{k≤i} βᵢₖψₖ is the orthonormalized
basis, c is a constant anchor and Aᵢ = Σ_{k≤i} βᵢₖFₖ. The nonlinearity Fₖ at node tₖ is sampled
on the partial solution built from the first k−1 coefficients (a lagged forward sweep).
"""

import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .basis import DEFAULT_GRAM_TOLERANCE, BasisSet, GridSpec, build_basis, uniform_basis
from .errors import DomainError, NoConvergence, NonFiniteF
from .expr import Expr, UnivariateFunction, eval_ast
from .kernel import KernelConvention, resolve_convention
from .polynomial import FloatArray
from .problem_file import ProblemFile, derive_forcing, evaluate_anchor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemSpec:
    """y''' + G(t, y, y', y'') = f(t) with y(0) = y(1), y'(0) = y'(1), y''(0) = y''(1)."""

    name: str
    lhs_extra: Expr
    forcing: Expr
    exact: Expr | None = None
    anchor: float = 0.0

    @classmethod
    def from_problem_file(cls, problem: ProblemFile) -> "ProblemSpec":
        forcing = derive_forcing(problem) if problem.forcing is None else problem.forcing
        return cls(
            name=problem.name,
            lhs_extra=problem.lhs_extra,
            forcing=forcing,
            exact=problem.exact,
            anchor=evaluate_anchor(problem),
        )

    def rhs(self, t: float, y: float, y1: float, y2: float) -> float:
        """F(t, y, y', y'') = f(t) − G(t, y, y', y'')."""
        env = {"t": t, "y": y, "y1": y1, "y2": y2}
        return float(eval_ast(self.forcing, env)) - float(eval_ast(self.lhs_extra, env))

    @cached_property
    def exact_function(self) -> UnivariateFunction | None:
        return None if self.exact is None else UnivariateFunction(self.exact)


@dataclass(frozen=True)
class SweepDiagnostics:
    lagged_residuals: FloatArray
    norm_history: FloatArray  # ‖y_k‖² for k = 1..n
    passes: int = 1
    change_history: list[float] = field(default_factory=list)
    runtime: float = 0.0


@dataclass(frozen=True, eq=False)
class Solution:
    basis: BasisSet
    coefficients: FloatArray  # A
    forcing_samples: FloatArray  # Fₖ, as used by the sweep
    weights: FloatArray  # wₖ = Σ_{i≥k} Aᵢβᵢₖ
    anchor: float
    diagnostics: SweepDiagnostics

    @property
    def grid(self) -> GridSpec:
        return self.basis.grid

    def __call__(self, t: float, order: int = 0) -> float:
        return evaluate_solution(self, t, order)

    def node_values(self, order: int) -> FloatArray:
        values = self.basis.psi_values(order) @ self.weights
        return values + self.anchor if order == 0 else values


def basis_for(
    grid: GridSpec,
    convention: KernelConvention | None = None,
    gram_tolerance: float = DEFAULT_GRAM_TOLERANCE,
) -> BasisSet:
    if convention is None:
        convention = resolve_convention()
    if grid == GridSpec.uniform(grid.n):
        return uniform_basis(grid.n, convention, gram_tolerance)
    return build_basis(grid, convention, gram_tolerance)


def _sweep(
    problem: ProblemSpec,
    basis: BasisSet,
    previous: FloatArray | None = None,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """One forward pass. Returns (A, F, w).

    `previous` holds coefficients of an earlier pass; the not-yet-updated tail Σ_{i≥k} Aᵢβᵢ is
    taken from it when sampling F at node k.
    """
    n = basis.n
    beta = basis.beta
    psi0, psi1, psi2 = (basis.psi_values(order) for order in range(3))

    if previous is None:
        tails = np.zeros((n + 1, n))
    else:
        contributions = previous[:, None] * beta
        tails = np.zeros((n + 1, n))
        tails[:n] = np.cumsum(contributions[::-1], axis=0)[::-1]

    coefficients = np.zeros(n)
    samples = np.zeros(n)
    weights = np.zeros(n)

    for k, t in enumerate(basis.grid.nodes):
        lagged = weights + tails[k]
        arguments = (
            problem.anchor + float(psi0[k] @ lagged),
            float(psi1[k] @ lagged),
            float(psi2[k] @ lagged),
        )

        try:
            value = problem.rhs(t, *arguments)
        except DomainError as e:
            raise NonFiniteF(k, t, arguments, e) from e
        if not math.isfinite(value):
            raise NonFiniteF(k, t, arguments, value)

        samples[k] = value
        coefficients[k] = float(beta[k, : k + 1] @ samples[: k + 1])
        weights += coefficients[k] * beta[k]
        logger.debug("Node %d (t=%.6g): F=%.17g, A=%.17g", k, t, value, coefficients[k])

    return coefficients, samples, weights


def _package(
    problem: ProblemSpec,
    basis: BasisSet,
    result: tuple[FloatArray, FloatArray, FloatArray],
    passes: int,
    history: list[float],
    started: float,
) -> Solution:
    coefficients, samples, weights = result
    residuals = basis.psi_values(3) @ weights - samples
    norm_history = problem.anchor**2 + np.cumsum(coefficients**2)
    diagnostics = SweepDiagnostics(
        lagged_residuals=residuals,
        norm_history=norm_history,
        passes=passes,
        change_history=list(history),
        runtime=time.perf_counter() - started,
    )
    return Solution(basis, coefficients, samples, weights, problem.anchor, diagnostics)


def solve(
    problem: ProblemSpec,
    grid: GridSpec,
    basis: BasisSet | None = None,
) -> Solution:
    started = time.perf_counter()
    if basis is None:
        basis = basis_for(grid)
    solution = _package(problem, basis, _sweep(problem, basis), 1, [], started)
    logger.info(
        "Solved %s on %d nodes in %.3f s", problem.name, grid.n, solution.diagnostics.runtime
    )
    return solution


def _node_change(basis: BasisSet, old_weights: FloatArray, new_weights: FloatArray) -> float:
    delta = new_weights - old_weights
    return max(float(np.max(np.abs(basis.psi_values(m) @ delta))) for m in range(3))


def picard_solve(
    problem: ProblemSpec,
    grid: GridSpec,
    max_outer: int,
    tol: float,
    basis: BasisSet | None = None,
) -> Solution:
    """Repeats the sweep, seeding each pass with the previous pass's coefficients, until the
    largest change of y, y', y'' at the nodes drops below `tol`.

    With max_outer = 1 this is `solve`.
    """
    if max_outer < 1:
        raise ValueError(f"max_outer must be at least 1, got {max_outer}")

    started = time.perf_counter()
    if basis is None:
        basis = basis_for(grid)

    result = _sweep(problem, basis)
    history = [_node_change(basis, np.zeros(basis.n), result[2])]
    solution = _package(problem, basis, result, 1, history, started)

    for outer in range(2, max_outer + 1):
        result = _sweep(problem, basis, previous=solution.coefficients)
        change = _node_change(basis, solution.weights, result[2])
        if change > history[-1]:
            logger.warning(
                "Picard pass %d increased the node change: %.3e after %.3e",
                outer,
                change,
                history[-1],
            )
        history.append(change)
        solution = _package(problem, basis, result, outer, history, started)
        logger.debug("Picard pass %d: change %.3e", outer, change)

        if change < tol:
            logger.info("Picard repetition converged after %d passes (%.3e)", outer, change)
            return solution

    if max_outer == 1:
        return solution
    raise NoConvergence(solution, history)


def evaluate_solution(sol: Solution, t: float, order: int = 0) -> float:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t!r} is outside [0, 1]")
    if not 0 <= order <= 3:
        raise DomainError(f"solution derivative order must be in 0..3, got {order}")
    value = float(sol.basis.psi_at(t, order) @ sol.weights)
    return value + sol.anchor if order == 0 else value


def residual_at_nodes(sol: Solution, problem: ProblemSpec, lagged: bool = True) -> FloatArray:
    """rⱼ = y_n'''(tⱼ) − Fⱼ.

    With `lagged`, Fⱼ are the samples the sweep used and r vanishes to rounding. Otherwise F is
    re-evaluated on the final y_n.
    """
    third = sol.basis.psi_values(3) @ sol.weights
    if lagged:
        return third - sol.forcing_samples

    y, y1, y2 = (sol.node_values(m) for m in range(3))
    actual = np.array(
        [
            problem.rhs(t, float(y[k]), float(y1[k]), float(y2[k]))
            for k, t in enumerate(sol.grid.nodes)
        ]
    )
    return third - actual
