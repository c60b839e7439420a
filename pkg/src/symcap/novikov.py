"""Truncated Novikov polynomials over exact rationals.

The coefficient ring used everywhere in this package is the subring of the
Novikov ring consisting of finite sums ``c_1*T^(e_1) + ... + c_r*T^(e_r)``
with rational coefficients and nonnegative rational exponents, optionally
truncated below a cutoff exponent.  Truncation at ``C`` is the quotient by
the ideal ``(T^C)``: every exponent ``>= C`` is dropped, which is exact
modulo ``T^C``.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Optional, Union

Rational = Union[int, Fraction]

INF = math.inf


def fmt_rational(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


_RAT_RE = re.compile(r"^-?\d+(/\d+)?$")


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not _RAT_RE.match(text):
        raise ValueError(f"not a rational: {text!r}")
    return Fraction(text)


class NovikovPolynomial:
    """Immutable finite T-power series with rational exponents >= 0.

    ``terms`` is a sorted tuple of (exponent, coefficient) pairs with
    strictly increasing exponents and no zero coefficients.  ``cutoff``
    of ``None`` means untruncated.
    """

    __slots__ = ("terms", "cutoff")

    def __init__(
        self,
        terms: Iterable[tuple[Rational, Rational]] = (),
        cutoff: Optional[Rational] = None,
    ):
        if cutoff is not None:
            cutoff = Fraction(cutoff)
            if cutoff <= 0:
                raise ValueError("cutoff must be positive")
        acc: dict[Fraction, Fraction] = {}
        for e, c in terms:
            e = Fraction(e)
            c = Fraction(c)
            if e < 0:
                raise ValueError(f"negative exponent T^{e}")
            if cutoff is not None and e >= cutoff:
                continue
            acc[e] = acc.get(e, Fraction(0)) + c
        object.__setattr__(
            self,
            "terms",
            tuple(sorted((e, c) for e, c in acc.items() if c != 0)),
        )
        object.__setattr__(self, "cutoff", cutoff)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("NovikovPolynomial is immutable")

    # -- constructors ----------------------------------------------------

    @staticmethod
    def zero(cutoff: Optional[Rational] = None) -> "NovikovPolynomial":
        return NovikovPolynomial((), cutoff)

    @staticmethod
    def unit(cutoff: Optional[Rational] = None) -> "NovikovPolynomial":
        return NovikovPolynomial(((0, 1),), cutoff)

    @staticmethod
    def monomial(
        exponent: Rational, coeff: Rational = 1, cutoff: Optional[Rational] = None
    ) -> "NovikovPolynomial":
        return NovikovPolynomial(((exponent, coeff),), cutoff)

    # -- ring structure ---------------------------------------------------

    @staticmethod
    def _merge_cutoff(a: "NovikovPolynomial", b: "NovikovPolynomial"):
        if a.cutoff is None:
            return b.cutoff
        if b.cutoff is None:
            return a.cutoff
        return min(a.cutoff, b.cutoff)

    def __add__(self, other: "NovikovPolynomial") -> "NovikovPolynomial":
        cutoff = self._merge_cutoff(self, other)
        return NovikovPolynomial(self.terms + other.terms, cutoff)

    def __neg__(self) -> "NovikovPolynomial":
        return NovikovPolynomial(((e, -c) for e, c in self.terms), self.cutoff)

    def __sub__(self, other: "NovikovPolynomial") -> "NovikovPolynomial":
        return self + (-other)

    def __mul__(self, other: "NovikovPolynomial") -> "NovikovPolynomial":
        cutoff = self._merge_cutoff(self, other)
        out: list[tuple[Fraction, Fraction]] = []
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                out.append((e1 + e2, c1 * c2))
        return NovikovPolynomial(out, cutoff)

    def scale(self, c: Rational) -> "NovikovPolynomial":
        c = Fraction(c)
        return NovikovPolynomial(((e, k * c) for e, k in self.terms), self.cutoff)

    def shift(self, exponent: Rational) -> "NovikovPolynomial":
        """Multiply by T^exponent."""
        return NovikovPolynomial(
            ((e + Fraction(exponent), c) for e, c in self.terms), self.cutoff
        )

    def truncate(self, cutoff: Rational) -> "NovikovPolynomial":
        return NovikovPolynomial(self.terms, cutoff)

    # -- queries ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def valuation(self) -> Union[Fraction, float]:
        """Smallest exponent with nonzero coefficient; inf for zero."""
        if not self.terms:
            return INF
        return self.terms[0][0]

    def at_one(self) -> Fraction:
        """Evaluate at T = 1 (scalarization used by the gb solver)."""
        return sum((c for _, c in self.terms), Fraction(0))

    def coefficient(self, exponent: Rational) -> Fraction:
        e = Fraction(exponent)
        for ee, c in self.terms:
            if ee == e:
                return c
        return Fraction(0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NovikovPolynomial)
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    # -- text form ----------------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            ce = fmt_rational(e)
            exp = ce if "/" not in ce else f"({ce})"
            parts.append(f"{fmt_rational(c)}*T^{exp}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"NovikovPolynomial({self})"


_TERM_RE = re.compile(
    r"^\s*(?P<coeff>-?\d+(?:/\d+)?)\s*\*\s*T\^(?:\((?P<pexp>-?\d+(?:/\d+)?)\)|(?P<exp>-?\d+(?:/\d+)?))\s*$"
)


def parse_novikov(
    text: str, cutoff: Optional[Rational] = None
) -> NovikovPolynomial:
    """Parse the canonical text form ``c*T^e + ...`` (``T^(p/q)`` for fractions).

    A bare rational ``c`` is accepted as shorthand for ``c*T^0``, and ``0``
    parses to the zero polynomial.
    """
    text = text.strip()
    if text == "0":
        return NovikovPolynomial.zero(cutoff)
    terms = []
    for chunk in text.split("+"):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty term in {text!r}")
        m = _TERM_RE.match(chunk)
        if m:
            exp = m.group("pexp") or m.group("exp")
            terms.append((parse_rational(exp), parse_rational(m.group("coeff"))))
        elif _RAT_RE.match(chunk):
            terms.append((Fraction(0), parse_rational(chunk)))
        else:
            raise ValueError(f"cannot parse Novikov term {chunk!r}")
    return NovikovPolynomial(terms, cutoff)
