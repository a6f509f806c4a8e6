"""Collocation basis: the functions ψᵢ, their Gram matrix under the W₂⁴ inner product and the
Gram-Schmidt coefficients that orthonormalize them."""

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from .errors import Breakdown, CrossCheckFailure, DomainError, SingularSystem
from .kernel import KernelConvention, resolve_convention, synthesize_kernel_at
from .polynomial import (
    FloatArray,
    PiecewisePolynomial,
    integrate_product,
    merge_breakpoints,
    piecewise_eval,
)

logger = logging.getLogger(__name__)

MIN_NODES = 2
BREAKDOWN_TOLERANCE = 1e-12
DEFAULT_GRAM_TOLERANCE = 1e-7


@dataclass(frozen=True)
class GridSpec:
    nodes: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.nodes) < MIN_NODES:
            raise DomainError(f"a collocation grid needs at least 2 nodes, got {len(self.nodes)}")
        if self.nodes[0] != 0.0 or self.nodes[-1] != 1.0:
            raise DomainError("collocation grid must start at 0 and end at 1")
        if any(a >= b for a, b in zip(self.nodes, self.nodes[1:])):
            raise DomainError("collocation nodes must be strictly increasing")

    @classmethod
    def uniform(cls, n: int) -> "GridSpec":
        if n < MIN_NODES:
            raise DomainError(f"a collocation grid needs at least 2 nodes, got {n}")
        return cls(tuple(i / (n - 1) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.nodes)

    def as_array(self) -> FloatArray:
        return np.array(self.nodes)


@dataclass(frozen=True)
class PsiFunction:
    index: int
    node: float
    pw: PiecewisePolynomial

    def __call__(self, t: float, order: int = 0) -> float:
        return piecewise_eval(self.pw, t, order)


def build_psi(grid: GridSpec, convention: KernelConvention | None = None) -> list[PsiFunction]:
    """ψᵢ(t) = ∂ₛ³K(t, s) at s = tᵢ, so that ⟨y, ψᵢ⟩ = y'''(tᵢ)."""
    if convention is None:
        convention = resolve_convention()
    return [
        PsiFunction(i, node, synthesize_kernel_at(node, convention).as_piecewise(3))
        for i, node in enumerate(grid.nodes)
    ]


def inner_w24(u: PiecewisePolynomial, v: PiecewisePolynomial) -> float:
    """Σᵢ₌₀³ u⁽ⁱ⁾(0)v⁽ⁱ⁾(0) + ∫₀¹ u⁽⁴⁾v⁽⁴⁾, integrated exactly piece by piece."""
    total = sum(piecewise_eval(u, 0.0, i) * piecewise_eval(v, 0.0, i) for i in range(4))
    du, dv = u.derive(4), v.derive(4)
    breakpoints = merge_breakpoints(u, v)
    for a, b in zip(breakpoints, breakpoints[1:]):
        mid = 0.5 * (a + b)
        total += integrate_product(du.piece_at(mid), dv.piece_at(mid), a, b)
    return total


def gram_matrix(psis: list[PsiFunction]) -> FloatArray:
    n = len(psis)
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = inner_w24(psis[i].pw, psis[j].pw)
    return gram


def gram_via_collocation(psis: list[PsiFunction], grid: GridSpec) -> FloatArray:
    """Gᵢⱼ = ⟨ψᵢ, ψⱼ⟩ = ψⱼ'''(tᵢ), from the reproducing property of ψᵢ."""
    return np.array([[psi(t, 3) for psi in psis] for t in grid.nodes])


def check_gram(gram: FloatArray, collocated: FloatArray, tolerance: float) -> float:
    scale = float(np.max(np.abs(gram)))
    difference = float(np.max(np.abs(gram - collocated)))
    if difference > tolerance * scale:
        i, j = np.unravel_index(np.argmax(np.abs(gram - collocated)), gram.shape)
        raise CrossCheckFailure(
            f"Gram matrix routes disagree at ({i}, {j}): {gram[i, j]!r} against "
            f"{collocated[i, j]!r} (max difference {difference:.3e}, scale {scale:.3e})"
        )
    return difference


def is_positive_definite(gram: FloatArray) -> bool:
    try:
        cholesky(gram, lower=True)
    except LinAlgError:
        return False
    return True


def gram_schmidt(gram: FloatArray) -> FloatArray:
    """Lower-triangular β with ψ̄ᵢ = Σ_{k≤i} βᵢₖψₖ orthonormal in the inner product whose Gram
    matrix is `gram`.

    Modified Gram-Schmidt on coefficient vectors, each projected out twice.
    """
    n = gram.shape[0]
    beta = np.zeros((n, n))
    gram_beta = np.zeros((n, n))  # row k holds G·βₖ
    largest = 0.0

    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        for _ in range(2):
            for k in range(i):
                v -= (gram_beta[k] @ v) * beta[k]

        norm_squared = float(v @ gram @ v)
        pivot = float(np.sqrt(norm_squared)) if norm_squared > 0.0 else 0.0
        largest = max(largest, pivot)
        if pivot <= BREAKDOWN_TOLERANCE * largest:
            raise Breakdown(i, pivot, largest)

        beta[i] = v / pivot
        gram_beta[i] = gram @ beta[i]

    return beta


@dataclass(frozen=True, eq=False)
class BasisSet:
    grid: GridSpec
    psis: list[PsiFunction]
    gram: FloatArray
    beta: FloatArray
    convention: KernelConvention
    gram_route_difference: float = field(default=0.0)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def orthonormality_residual(self) -> float:
        product = self.beta @ self.gram @ self.beta.T
        return float(np.max(np.abs(product - np.eye(self.n))))

    def psi_values(self, order: int) -> FloatArray:
        """Matrix [k, m] = ψₘ⁽ᵒʳᵈᵉʳ⁾(tₖ)."""
        return self._psi_tables[order]

    def psi_at(self, t: float, order: int = 0) -> FloatArray:
        if t == 1.0 and order < 3:
            t = 0.0
        return np.array([psi(t, order) for psi in self.psis])

    @cached_property
    def _psi_tables(self) -> tuple[FloatArray, ...]:
        nodes = self.grid.as_array()
        # ψ⁽ᵐ⁾(1) = ψ⁽ᵐ⁾(0) for m ≤ 2, exactly
        closed = nodes.copy()
        closed[-1] = 0.0
        return tuple(
            np.column_stack(
                [psi.pw.evaluate_many(closed if order < 3 else nodes, order) for psi in self.psis]
            )
            for order in range(4)
        )


def build_basis(
    grid: GridSpec,
    convention: KernelConvention | None = None,
    gram_tolerance: float = DEFAULT_GRAM_TOLERANCE,
) -> BasisSet:
    if convention is None:
        convention = resolve_convention()

    psis = build_psi(grid, convention)
    gram = gram_matrix(psis)
    if not is_positive_definite(gram):
        raise SingularSystem(f"Gram matrix on {grid.n} nodes is not positive definite")
    difference = check_gram(gram, gram_via_collocation(psis, grid), gram_tolerance)
    beta = gram_schmidt(gram)

    basis = BasisSet(grid, psis, gram, beta, convention, difference)
    logger.info(
        "Built basis on %d nodes (Gram routes differ by %.2e, orthonormality residual %.2e)",
        grid.n,
        difference,
        basis.orthonormality_residual,
    )
    return basis


@lru_cache(maxsize=16)
def uniform_basis(
    n: int,
    convention: KernelConvention,
    gram_tolerance: float = DEFAULT_GRAM_TOLERANCE,
) -> BasisSet:
    return build_basis(GridSpec.uniform(n), convention, gram_tolerance)
