"""Exact linear algebra over the rationals.

Square systems go through fraction-free (Bareiss) elimination on an
integer-scaled copy of the matrix; rectangular systems use plain Gauss-Jordan
over ``Fraction``.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence


class SingularMatrixError(ArithmeticError):
    pass


def _row_to_ints(row: Sequence[Fraction]) -> tuple[list[int], int]:
    den = 1
    for x in row:
        den = lcm(den, Fraction(x).denominator)
    return [int(Fraction(x) * den) for x in row], den


def solve(a: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Solve ``a x = b`` exactly for square nonsingular ``a``.

    Each augmented row is scaled to integers, then Bareiss elimination keeps
    every intermediate entry an integer (each division is exact).
    """
    size = len(a)
    if any(len(row) != size for row in a) or len(b) != size:
        raise ValueError("solve needs a square matrix and a matching right-hand side")
    if size == 0:
        return []
    m = [_row_to_ints(list(row) + [rhs])[0] for row, rhs in zip(a, b)]

    prev = 1
    for k in range(size):
        if m[k][k] == 0:
            for r in range(k + 1, size):
                if m[r][k] != 0:
                    m[k], m[r] = m[r], m[k]
                    break
            else:
                raise SingularMatrixError(f"matrix is singular (column {k})")
        pivot = m[k][k]
        row_k = m[k]
        for i in range(k + 1, size):
            row_i = m[i]
            factor = row_i[k]
            for j in range(k + 1, size + 1):
                row_i[j] = (row_i[j] * pivot - factor * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot

    x = [Fraction(0)] * size
    for i in range(size - 1, -1, -1):
        acc = Fraction(m[i][size])
        for j in range(i + 1, size):
            if m[i][j]:
                acc -= m[i][j] * x[j]
        x[i] = acc / m[i][i]
    return x


def solve_any(a: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Return one exact solution of a possibly rectangular system, or ``None``.

    Free variables are set to zero.  ``None`` means the system is inconsistent.
    """
    rows = len(a)
    cols = len(a[0]) if rows else 0
    m = [[Fraction(x) for x in row] + [Fraction(rhs)] for row, rhs in zip(a, b)]
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    for i in range(r, rows):
        if m[i][cols] != 0:
            return None
    x = [Fraction(0)] * cols
    for i, c in enumerate(pivots):
        x[c] = m[i][cols]
    return x


def matvec(a: Sequence[Sequence], x: Sequence) -> list:
    return [sum((aij * xj for aij, xj in zip(row, x)), Fraction(0)) for row in a]
