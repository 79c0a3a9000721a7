"""Dense univariate polynomials with exact rational coefficients.

All reliability computations in this package run over these polynomials;
no floating point is used anywhere on the exact path.  Coefficients are
stored by ascending degree with trailing zeros trimmed, so the zero
polynomial has an empty coefficient tuple.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .errors import FormatError

RationalLike = Fraction | int | str


def parse_rational(text: str | int) -> Fraction:
    """Parse "a/b" or "a" into an exact rational."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"not a rational: {text!r}") from exc


def format_rational(value: Fraction) -> str:
    return str(value)


class Poly:
    """Immutable polynomial over the rationals."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[RationalLike] = ()):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    @classmethod
    def zero(cls) -> Poly:
        return cls(())

    @classmethod
    def one(cls) -> Poly:
        return cls((1,))

    @classmethod
    def x(cls) -> Poly:
        """The identity polynomial p."""
        return cls((0, 1))

    @classmethod
    def constant(cls, c: RationalLike) -> Poly:
        return cls((c,))

    @classmethod
    def from_strings(cls, items: Iterable[str | int]) -> Poly:
        return cls(tuple(parse_rational(s) for s in items))

    def to_strings(self) -> list[str]:
        return [format_rational(c) for c in self.coeffs]

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial reported as -1."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, k: int) -> Fraction:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def leading(self) -> Fraction:
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __add__(self, other) -> Poly:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> Poly:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> Poly:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> Poly:
        other = _coerce(other)
        if other is None:
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly(())
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca:
                for j, cb in enumerate(b):
                    if cb:
                        out[i + j] += ca * cb
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Poly:
        if n < 0:
            raise ValueError("negative power")
        result = Poly.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __call__(self, x: Fraction) -> Fraction:
        """Exact evaluation by Horner's rule."""
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> Poly:
        return Poly(tuple(i * c for i, c in enumerate(self.coeffs) if i))

    def compose(self, inner: Poly) -> Poly:
        """Substitute ``inner`` for the variable."""
        acc = Poly.zero()
        for c in reversed(self.coeffs):
            acc = acc * inner + Poly.constant(c)
        return acc

    def monic(self) -> Poly:
        if self.is_zero:
            return self
        lc = self.leading()
        return Poly(tuple(c / lc for c in self.coeffs))

    def divmod(self, other: Poly) -> tuple[Poly, Poly]:
        """Exact polynomial long division; ``other`` must be nonzero."""
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        dlead = other.leading()
        dd = other.degree
        quot = [Fraction(0)] * max(0, len(rem) - dd)
        for k in range(len(rem) - dd - 1, -1, -1):
            c = rem[k + dd] / dlead
            if c:
                quot[k] = c
                for j, oc in enumerate(other.coeffs):
                    rem[k + j] -= c * oc
        return Poly(quot), Poly(rem)

    def exact_div(self, other: Poly) -> Poly:
        q, r = self.divmod(other)
        if not r.is_zero:
            raise ValueError("division is not exact")
        return q

    def __repr__(self) -> str:
        return f"Poly({[str(c) for c in self.coeffs]})"


def _coerce(value) -> Poly | None:
    if isinstance(value, Poly):
        return value
    if isinstance(value, (int, Fraction)):
        return Poly((value,))
    return None


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic greatest common divisor over the rationals."""
    while not b.is_zero:
        _, r = a.divmod(b)
        a, b = b, r.monic() if not r.is_zero else r
    if a.is_zero:
        return a
    return a.monic()
