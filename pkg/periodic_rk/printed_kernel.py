"""The closed-form coefficient lists of the W₂⁴[0,1] periodic kernel, as published.

The lists are kept verbatim, including entries that disagree with the synthesized kernel
(a₃ and a₄ are identical, a₂ and b₂ differ in the s⁶ coefficient). They are a reference for
`periodic_rk.kernel.compare_printed` only and are never used to solve anything.

Two lists contain a comma where an operator is expected ("72804784s², 54887415s³" in a₃/a₄ and
"462685s⁵, 9791s⁶" in b₅); both are read as a positive term.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError
from .polynomial import Polynomial

ALPHA = (
    292354444,
    1169417776,
    10524759984,
    42099039936,
    70165066560,
    210495199680,
    1473466397760,
)

# Coefficients of s⁰..s⁷, before division by the matching α.
_A_LISTS: tuple[tuple[Fraction | int, ...], ...] = (
    (0, 9244, -6300, -50820, -12705, 205611, -203035, 58005),
    (0, -25200, 2041264, -3024100, -756025, 2570499, -806113, 5),
    (0, -1829520, -27216900, 72804784, 54887415, 11205561, -76873, 363),
    (0, -1829520, -27216900, 72804784, 54887415, 11205561, -76873, 363),
    (0, 49346640, -138124504, 74703740, 18675935, -5054705, 462685, -9791),
    (0, 146169244, -145159740, -1537460, -384365, 1388055, -504739, 29005),
    (-292354444, 292345200, 6300, 50820, 12705, -205611, 203035, -58005),
)

_B_LISTS: tuple[tuple[Fraction | int, ...], ...] = (
    (0, 9244, -6300, -50820, -12705, 205611, Fraction(36542311, 180), 58005),
    (0, -25200, 2041264, -3024100, -756025, Fraction(-34351126, 15), -806443, 5),
    (0, -1829520, -27216900, 72804784, 18201196, 11205561, -76873, 363),
    (0, -1829520, -27216900, 219549660, -54887415, 11205561, -76873, 363),
    (0, 49346640, 154229940, 74703740, 18675935, -5054705, 462685, 9791),
    (0, -146185200, -145159740, -1537460, -384365, 1388055, -504739, 29005),
    (0, 292345200, 6300, 50820, 12705, -205611, 203035, -58005),
)


def _scaled(coefficients: tuple[Fraction | int, ...], alpha: int) -> Polynomial:
    return Polynomial([float(Fraction(c) / alpha) for c in coefficients])


@dataclass(frozen=True)
class PrintedKernelTable:
    """aᵢ(s), bᵢ(s) for i = 0..7 as polynomials in s; K_s(t) = Σ aᵢ(s)tⁱ for t ≤ s and
    Σ bᵢ(s)tⁱ for t > s."""

    a: tuple[Polynomial, ...]
    b: tuple[Polynomial, ...]
    alpha: tuple[int, ...] = ALPHA

    @classmethod
    def load(cls) -> "PrintedKernelTable":
        a = [Polynomial.constant(1.0)]
        b = [Polynomial([1.0, 0, 0, 0, 0, 0, 0, -1 / 5040])]
        for alpha, a_list, b_list in zip(ALPHA, _A_LISTS, _B_LISTS):
            a.append(_scaled(a_list, alpha))
            b.append(_scaled(b_list, alpha))
        return cls(tuple(a), tuple(b))

    def t_coefficients(self, s: float, left: bool) -> list[float]:
        return [c(s) for c in (self.a if left else self.b)]


PRINTED_TABLE = PrintedKernelTable.load()


def printed_kernel_eval(t: float, s: float, t_order: int = 0) -> float:
    """Evaluates ∂ₜ^t_order K(t, s) from the published coefficient lists."""
    if not (0.0 <= t <= 1.0 and 0.0 <= s <= 1.0):
        raise DomainError(f"(t, s) = ({t!r}, {s!r}) is outside [0, 1]²")
    if not 0 <= t_order <= 7:
        raise DomainError(f"t-derivative order must be in 0..7, got {t_order}")

    coefficients = PRINTED_TABLE.t_coefficients(s, left=t <= s)
    return sum(
        c * math.perm(i, t_order) * t ** (i - t_order)
        for i, c in enumerate(coefficients)
        if i >= t_order
    )
