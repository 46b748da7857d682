"""Exact power expressions of the form ``sum_i c_i * P**e_i``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .channel_model import as_fraction

__all__ = ["PowerExpr", "P", "ZERO"]


@dataclass(frozen=True)
class PowerExpr:
    """A signed sum of monomials in the SNR ``P`` with rational data.

    ``terms`` holds ``(exponent, coefficient)`` pairs sorted by decreasing
    exponent with no zero coefficients, so equality is structural.
    """

    terms: tuple[tuple[Fraction, Fraction], ...] = ()

    @classmethod
    def from_mapping(cls, mapping) -> "PowerExpr":
        acc: dict[Fraction, Fraction] = {}
        for e, c in mapping:
            e, c = as_fraction(e), as_fraction(c)
            acc[e] = acc.get(e, Fraction(0)) + c
        return cls(tuple(sorted(((e, c) for e, c in acc.items() if c != 0),
                                reverse=True)))

    @classmethod
    def monomial(cls, exponent, coeff=1) -> "PowerExpr":
        return cls.from_mapping([(exponent, coeff)])

    def __add__(self, other: "PowerExpr") -> "PowerExpr":
        return PowerExpr.from_mapping(self.terms + other.terms)

    def __sub__(self, other: "PowerExpr") -> "PowerExpr":
        return self + (-other)

    def __neg__(self) -> "PowerExpr":
        return PowerExpr(tuple((e, -c) for e, c in self.terms))

    def __mul__(self, scale) -> "PowerExpr":
        s = as_fraction(scale)
        return PowerExpr.from_mapping((e, c * s) for e, c in self.terms)

    __rmul__ = __mul__

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def max_exponent(self) -> Fraction | None:
        return self.terms[0][0] if self.terms else None

    def nonnegative_for_p_above_one(self) -> bool:
        """Sufficient test that the expression is ``>= 0`` for every ``P >= 1``.

        With exponents sorted downward, non-negative prefix sums of the
        coefficients imply non-negativity (Abel summation), as long as all
        exponents are non-negative.
        """
        if any(e < 0 for e, _ in self.terms):
            return False
        running = Fraction(0)
        for _, c in self.terms:
            running += c
            if running < 0:
                return False
        return True

    def evaluate(self, p_linear: float) -> float:
        if not self.terms:
            return 0.0
        return math.fsum(float(c) * p_linear ** float(e) for e, c in self.terms)

    def to_json(self) -> list[list[str]]:
        return [[str(e), str(c)] for e, c in self.terms]

    @classmethod
    def from_json(cls, data) -> "PowerExpr":
        return cls.from_mapping((Fraction(e), Fraction(c)) for e, c in data)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for i, (e, c) in enumerate(self.terms):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            mono = "1" if e == 0 else ("P" if e == 1 else f"P^({e})")
            body = mono if mag == 1 else f"{mag}*{mono}"
            if i == 0:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)


def P(exponent=1, coeff=1) -> PowerExpr:
    """Shorthand for ``coeff * P**exponent``."""
    return PowerExpr.monomial(exponent, coeff)


ZERO = PowerExpr()
