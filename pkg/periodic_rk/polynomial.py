"""Dense univariate polynomials and breakpoint-partitioned piecewise polynomials on [0, 1].

Coefficients are stored in increasing order of powers (c₀ + c₁t + … + c_d tᵈ) and evaluated
with Horner's scheme. Products are integrated exactly through the antiderivative of the
convolved coefficients.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt
from numpy.polynomial import polynomial as P

from .errors import DomainError

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class Polynomial:
    coeffs: FloatArray

    def __init__(self, coeffs: Iterable[float] | FloatArray) -> None:
        arr = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=float)
        if arr.ndim != 1:
            raise ValueError("polynomial coefficients must form a 1-D sequence")
        if arr.size == 0:
            arr = np.zeros(1)
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def constant(cls, value: float) -> "Polynomial":
        return cls([value])

    @classmethod
    def monomial(cls, degree: int, scale: float = 1.0) -> "Polynomial":
        coeffs = np.zeros(degree + 1)
        coeffs[degree] = scale
        return cls(coeffs)

    @property
    def degree(self) -> int:
        nonzero = np.flatnonzero(self.coeffs)
        return int(nonzero[-1]) if nonzero.size else 0

    def __call__(self, t: float, order: int = 0) -> float:
        return poly_eval(self, t, order)

    def evaluate_many(self, ts: FloatArray, order: int = 0) -> FloatArray:
        c = self.coeffs if order == 0 else poly_derive(self, order).coeffs
        return np.asarray(P.polyval(ts, c), dtype=float)

    def derive(self, k: int = 1) -> "Polynomial":
        return poly_derive(self, k)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(P.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(P.polysub(self.coeffs, other.coeffs))

    def __mul__(self, other: "Polynomial | float") -> "Polynomial":
        if isinstance(other, Polynomial):
            return Polynomial(P.polymul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * other)

    def __rmul__(self, other: float) -> "Polynomial":
        return Polynomial(self.coeffs * other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(-self.coeffs)

    def __repr__(self) -> str:
        return f"Polynomial({self.coeffs.tolist()!r})"


def poly_eval(p: Polynomial, t: float, order: int = 0) -> float:
    """Returns the `order`-th derivative of p at t. Derivatives beyond the degree are 0."""
    if order < 0:
        raise DomainError(f"derivative order must be non-negative, got {order}")
    c = p.coeffs if order == 0 else P.polyder(p.coeffs, order)
    # polyval is Horner's recurrence over the coefficients
    return float(P.polyval(t, c))


def poly_derive(p: Polynomial, k: int) -> Polynomial:
    if k < 0:
        raise DomainError(f"derivative order must be non-negative, got {k}")
    if k == 0:
        return p
    if k >= p.coeffs.size:
        return Polynomial.constant(0.0)
    return Polynomial(P.polyder(p.coeffs, k))


def integrate_product(p: Polynomial, q: Polynomial, a: float, b: float) -> float:
    """Exact ∫ₐᵇ p(v)·q(v) dv."""
    if a > b:
        raise DomainError(f"integration bounds are reversed: [{a}, {b}]")
    antiderivative = P.polyint(P.polymul(p.coeffs, q.coeffs))
    return float(P.polyval(b, antiderivative) - P.polyval(a, antiderivative))


@dataclass(frozen=True, eq=False)
class PiecewisePolynomial:
    """Polynomials over the subintervals of [0, 1] cut at `breakpoints`.

    At an interior breakpoint the left piece is used (the "t ≤ s" branch).
    """

    breakpoints: tuple[float, ...]
    pieces: tuple[Polynomial, ...]

    def __post_init__(self) -> None:
        bp = self.breakpoints
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError(f"breakpoints must start at 0 and end at 1, got {bp!r}")
        if any(left >= right for left, right in zip(bp, bp[1:])):
            raise ValueError(f"breakpoints must be strictly increasing, got {bp!r}")
        if len(self.pieces) != len(bp) - 1:
            raise ValueError(
                f"expected {len(bp) - 1} pieces for {len(bp)} breakpoints, got {len(self.pieces)}"
            )

    @classmethod
    def split_at(cls, s: float, left: Polynomial, right: Polynomial) -> "PiecewisePolynomial":
        """Two pieces meeting at s. At s = 0 or s = 1 one side covers a single point and
        is dropped."""
        if s <= 0.0:
            return cls((0.0, 1.0), (right,))
        elif s >= 1.0:
            return cls((0.0, 1.0), (left,))
        return cls((0.0, s, 1.0), (left, right))

    def piece_index(self, t: float) -> int:
        i = int(np.searchsorted(self.breakpoints, t, side="left")) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def piece_at(self, t: float) -> Polynomial:
        return self.pieces[self.piece_index(t)]

    def __call__(self, t: float, order: int = 0) -> float:
        return piecewise_eval(self, t, order)

    def evaluate_many(self, ts: Sequence[float] | FloatArray, order: int = 0) -> FloatArray:
        points = np.asarray(ts, dtype=float)
        if np.any((points < 0.0) | (points > 1.0)):
            raise DomainError("piecewise polynomial evaluated outside [0, 1]")
        idx = np.clip(
            np.searchsorted(self.breakpoints, points, side="left") - 1,
            0,
            len(self.pieces) - 1,
        )
        out = np.empty_like(points)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = piece.evaluate_many(points[mask], order)
        return out

    def derive(self, k: int = 1) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breakpoints, tuple(p.derive(k) for p in self.pieces))

    def __add__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return self._combine(other, 1.0)

    def __sub__(self, other: "PiecewisePolynomial") -> "PiecewisePolynomial":
        return self._combine(other, -1.0)

    def __mul__(self, scale: float) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breakpoints, tuple(p * scale for p in self.pieces))

    __rmul__ = __mul__

    def _combine(self, other: "PiecewisePolynomial", sign: float) -> "PiecewisePolynomial":
        breakpoints = merge_breakpoints(self, other)
        pieces = list[Polynomial]()
        for a, b in zip(breakpoints, breakpoints[1:]):
            mid = 0.5 * (a + b)
            pieces.append(self.piece_at(mid) + other.piece_at(mid) * sign)
        return PiecewisePolynomial(breakpoints, tuple(pieces))


def merge_breakpoints(*functions: PiecewisePolynomial) -> tuple[float, ...]:
    return tuple(sorted({b for f in functions for b in f.breakpoints}))


def piecewise_eval(pw: PiecewisePolynomial, t: float, order: int = 0) -> float:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t!r} is outside [0, 1]")
    return poly_eval(pw.piece_at(t), t, order)
