"""Univariate polynomials and rational functions in ``n`` with exact coefficients.

Polynomials are plain tuples of coefficients in ascending degree.  The helpers
here work over ``Fraction``; :class:`RationalFunction` stores its numerator and
denominator as reduced integer polynomials.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Sequence

Poly = tuple  # ascending coefficients, no trailing zeros; () is the zero polynomial


def poly_trim(coeffs: Iterable) -> Poly:
    c = [Fraction(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_degree(p: Poly) -> int:
    return len(p) - 1  # zero polynomial has degree -1


def poly_eval(p: Sequence, x) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_add(p: Poly, q: Poly) -> Poly:
    m = max(len(p), len(q))
    return poly_trim((p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(m))


def poly_sub(p: Poly, q: Poly) -> Poly:
    return poly_add(p, tuple(-c for c in q))


def poly_mul(p: Poly, q: Poly) -> Poly:
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return poly_trim(out)


def poly_divmod(p: Poly, q: Poly) -> tuple[Poly, Poly]:
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(p)
    quot = [Fraction(0)] * max(len(p) - len(q) + 1, 0)
    lead = q[-1]
    while len(r) >= len(q) and r:
        shift = len(r) - len(q)
        c = r[-1] / lead
        quot[shift] = c
        for i, b in enumerate(q):
            r[shift + i] -= c * b
        r = list(poly_trim(r))
    return poly_trim(quot), poly_trim(r)


def poly_gcd(p: Poly, q: Poly) -> Poly:
    """Monic gcd over the rationals (Euclid)."""
    a, b = poly_trim(p), poly_trim(q)
    while b:
        a, b = b, poly_divmod(a, b)[1]
    if not a:
        return ()
    return tuple(c / a[-1] for c in a)


def _integerize(p: Poly) -> tuple[int, ...]:
    """Scale to coprime integer coefficients (sign preserved)."""
    if not p:
        return ()
    den = reduce(lcm, (c.denominator for c in p), 1)
    ints = [int(c * den) for c in p]
    g = reduce(gcd, ints, 0)
    return tuple(x // g for x in ints)


class RationalFunction:
    """A reduced quotient of integer polynomials in one variable ``n``.

    The denominator is coprime to the numerator and has a positive leading
    coefficient; the numerator and denominator share no integer content.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Iterable = (0,), den: Iterable = (1,)):
        p, q = poly_trim(num), poly_trim(den)
        if not q:
            raise ZeroDivisionError("denominator is identically zero")
        g = poly_gcd(p, q)
        if len(g) > 1:
            p, q = poly_divmod(p, g)[0], poly_divmod(q, g)[0]
        if not p:
            self.num, self.den = (), (1,)
            return
        scale = reduce(lcm, (c.denominator for c in p + q), 1)
        p = tuple(c * scale for c in p)
        q = tuple(c * scale for c in q)
        content = reduce(gcd, (int(c) for c in p + q), 0)
        if q[-1] < 0:
            content = -content
        self.num = tuple(int(c) // content for c in p)
        self.den = tuple(int(c) // content for c in q)

    @classmethod
    def constant(cls, value) -> "RationalFunction":
        value = Fraction(value)
        return cls((value.numerator,), (value.denominator,))

    @classmethod
    def polynomial(cls, coeffs: Iterable) -> "RationalFunction":
        return cls(coeffs, (1,))

    def __call__(self, n) -> Fraction:
        d = poly_eval(self.den, n)
        if d == 0:
            raise ZeroDivisionError(f"denominator vanishes at n={n}")
        return poly_eval(self.num, n) / d

    def is_polynomial(self) -> bool:
        return len(self.den) == 1

    @property
    def degrees(self) -> tuple[int, int]:
        return poly_degree(self.num), poly_degree(self.den)

    def __eq__(self, other):
        if isinstance(other, RationalFunction):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self == RationalFunction.constant(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.den))

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(poly_mul(self.num, other.num), poly_mul(self.den, other.den))

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction(
            poly_add(poly_mul(self.num, other.den), poly_mul(other.num, self.den)),
            poly_mul(self.den, other.den),
        )

    def to_json(self) -> dict:
        return {"num": list(self.num) or [0], "den": list(self.den)}

    def __repr__(self):
        return f"RationalFunction({list(self.num)}, {list(self.den)})"

    def __str__(self):
        num = format_poly(self.num)
        if self.is_polynomial() and self.den[0] == 1:
            return num
        den = format_poly(self.den)
        if len([c for c in self.num if c]) > 1:
            num = f"({num})"
        if len([c for c in self.den if c]) > 1 or (len(self.den) > 1 and self.den[-1] != 1):
            den = f"({den})"
        return f"{num}/{den}"


def format_poly(p: Sequence, var: str = "n") -> str:
    terms = []
    for d in range(len(p) - 1, -1, -1):
        c = p[d]
        if c == 0:
            continue
        mag = abs(c)
        if d == 0:
            body = str(mag)
        else:
            mono = var if d == 1 else f"{var}^{d}"
            body = mono if mag == 1 else f"{mag}*{mono}"
        sign = "-" if c < 0 else "+"
        terms.append((sign, body))
    if not terms:
        return "0"
    first_sign, first = terms[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out


def falling(x: int, k: int) -> int:
    """Falling factorial x(x-1)...(x-k+1); zero once a factor hits zero."""
    out = 1
    for i in range(k):
        if x - i <= 0:
            return 0
        out *= x - i
    return out
