"""Exact rational-function and polynomial fitting of swept sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .linalg import solve_any
from .ratfunc import RationalFunction, poly_eval

RATIONAL_HOLDOUT = 3
POLYNOMIAL_HOLDOUT = 2
FLOAT_FIT_TOL = 1e-8
POLY_FLOAT_TOL = 1e-6
MAX_DENOMINATOR = 10**7


class InsufficientPointsError(ValueError):
    pass


@dataclass(frozen=True)
class FitReport:
    model: str  # "rational-function" or "polynomial"
    fitted: RationalFunction | tuple[Fraction, ...] | None
    train_points: tuple[tuple[int, object], ...]
    validation_points: tuple[tuple[int, object], ...]
    exact: bool
    max_validation_error: float
    note: str = ""
    degrees: tuple[int, int] = field(default=(0, 0))

    def evaluate(self, n) -> Fraction:
        if self.fitted is None:
            raise ValueError("no model was fitted")
        if isinstance(self.fitted, RationalFunction):
            return self.fitted(n)
        return poly_eval(self.fitted, n)

    @property
    def degree(self) -> int:
        """Numerator degree minus denominator degree (the growth order)."""
        return self.degrees[0] - self.degrees[1]

    def to_json(self) -> dict:
        if isinstance(self.fitted, RationalFunction):
            fitted = self.fitted.to_json()
            text = str(self.fitted)
        elif self.fitted is None:
            fitted, text = None, None
        else:
            fitted = [str(c) for c in self.fitted]
            text = str(RationalFunction.polynomial(self.fitted))
        return {
            "model": self.model,
            "fitted": fitted,
            "formula": text,
            "degrees": list(self.degrees),
            "exact": self.exact,
            "max_validation_error": self.max_validation_error,
            "note": self.note,
        }


def _split(points, holdout: int, minimum: int, what: str):
    pts = [(int(n), v) for n, v in points]
    if len(pts) < minimum:
        raise InsufficientPointsError(f"{what} needs at least {minimum} points, got {len(pts)}")
    return tuple(pts[:-holdout]), tuple(pts[-holdout:])


def _candidate(train, d_num: int, d_den: int) -> RationalFunction | None:
    # a(n) - y b(n) = 0 with b monic of degree d_den
    rows, rhs = [], []
    for n, y in train:
        powers = [Fraction(n) ** i for i in range(max(d_num, d_den) + 1)]
        rows.append(powers[: d_num + 1] + [-y * powers[j] for j in range(d_den)])
        rhs.append(y * powers[d_den])
    sol = solve_any(rows, rhs)
    if sol is None:
        return None
    den = sol[d_num + 1 :] + [Fraction(1)]
    num = sol[: d_num + 1]
    if any(poly_eval(den, n) == 0 for n, _ in train):
        return None
    return RationalFunction(num, den)


def _max_error(model: RationalFunction, points) -> Fraction | None:
    worst = Fraction(0)
    for n, y in points:
        try:
            worst = max(worst, abs(model(n) - y))
        except ZeroDivisionError:
            return None
    return worst


def fit_rational(points: Sequence[tuple[int, object]], max_deg: int) -> FitReport:
    """Exact rational interpolation, searching ``(d_num, d_den)`` by total degree.

    The last three points are held out; a model is accepted only if it
    reproduces every training and validation point exactly.
    """
    pts = [(n, Fraction(y)) for n, y in points]
    train, val = _split(pts, RATIONAL_HOLDOUT, 2 * max_deg + RATIONAL_HOLDOUT, "fit_rational")
    best: tuple[Fraction, RationalFunction] | None = None
    for total in range(2 * max_deg + 1):
        for d_den in range(min(total, max_deg) + 1):
            d_num = total - d_den
            if d_num > max_deg or d_num + d_den + 1 > len(train):
                continue
            model = _candidate(train, d_num, d_den)
            if model is None or _max_error(model, train) != 0:
                continue
            err = _max_error(model, val)
            if err is None:
                continue
            if err == 0:
                return FitReport("rational-function", model, train, val, True, 0.0, degrees=model.degrees)
            if best is None or err < best[0]:
                best = (err, model)
    if best is None:
        return FitReport("rational-function", None, train, val, False, float("inf"), "no consistent model")
    err, model = best
    return FitReport("rational-function", model, train, val, False, float(err), degrees=model.degrees)


def fit_rational_float(
    points: Sequence[tuple[int, float]], max_deg: int, tol: float = FLOAT_FIT_TOL
) -> FitReport:
    """Rational fit of floating data: rationalize, fit exactly, verify within ``tol``."""
    pts = [(int(n), float(y)) for n, y in points]
    rationalized = [(n, Fraction(y).limit_denominator(MAX_DENOMINATOR)) for n, y in pts]
    exact = fit_rational(rationalized, max_deg)
    train, val = _split(pts, RATIONAL_HOLDOUT, 2 * max_deg + RATIONAL_HOLDOUT, "fit_rational")
    if exact.fitted is not None:
        errors = []
        for n, y in pts:
            try:
                errors.append(abs(float(exact.fitted(n)) - y))
            except ZeroDivisionError:
                errors.append(float("inf"))
        if exact.exact and max(errors) <= tol:
            return FitReport(
                "rational-function", exact.fitted, train, val, True, max(errors[-RATIONAL_HOLDOUT:]),
                degrees=exact.degrees,
            )
    return FitReport(
        "rational-function", exact.fitted, train, val, False, exact.max_validation_error,
        "algebraic, not rational-fit", exact.degrees,
    )


def _interpolate(points) -> tuple[Fraction, ...]:
    """Coefficients (ascending) of the interpolating polynomial through ``points``."""
    size = len(points)
    rows = [[Fraction(n) ** i for i in range(size)] for n, _ in points]
    sol = solve_any(rows, [y for _, y in points])
    assert sol is not None, "distinct nodes give a nonsingular Vandermonde system"
    coeffs = list(sol)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def fit_polynomial(points: Sequence[tuple[int, object]]) -> FitReport:
    """Minimal-degree polynomial through the data, last two points held out.

    Integer and rational data must be matched exactly; float data within
    ``1e-6`` (after snapping values that are within tolerance of an integer).
    """
    is_float = any(isinstance(y, float) for _, y in points)
    pts = []
    for n, y in points:
        if is_float:
            r = round(y)
            pts.append((int(n), Fraction(r) if abs(y - r) <= POLY_FLOAT_TOL else Fraction(y)))
        else:
            pts.append((int(n), Fraction(y)))
    train, val = _split(pts, POLYNOMIAL_HOLDOUT, 5, "fit_polynomial")
    tol = Fraction(POLY_FLOAT_TOL) if is_float else Fraction(0)
    raw = {n: y for n, y in points}
    best = None
    for d in range(len(train)):
        coeffs = _interpolate(train[: d + 1])
        errs = [abs(poly_eval(coeffs, n) - Fraction(raw[n])) for n, _ in train + val]
        if max(errs) <= tol:
            verr = max(errs[len(train) :])
            return FitReport("polynomial", coeffs, train, val, True, float(verr), degrees=(max(len(coeffs) - 1, 0), 0))
        verr = max(errs[len(train) :])
        if best is None or verr < best[0]:
            best = (verr, coeffs)
    verr, coeffs = best
    return FitReport("polynomial", coeffs, train, val, False, float(verr), degrees=(max(len(coeffs) - 1, 0), 0))
