"""Sweeps over n and the verdicts drawn from them."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .chain import (
    ChainError,
    Spectrum,
    build_simple_walk,
    mixing_bounds,
    mixing_times,
    relaxation_time,
    spectrum,
)
from .family import FamilySpec, InstanceError, instantiate_graph
from .fitting import FitReport, InsufficientPointsError, fit_polynomial, fit_rational_float
from .hitting import HittingCapError, large_set_hitting_time, ratio_window
from .quotient import build_orbit_walk, full_spectrum_from_quotient, verify_state_stability

DEFAULT_FULL_CAP = 1000
DEFAULT_MAX_FIT_DEGREE = 4
DEFAULT_PRODUCT_FLOOR = 0.05
CUTOFF_TAIL_THRESHOLD = Fraction(105, 100)
HITTING_WINDOW = 10
WORKERS_ENV = "FIWALKS_WORKERS"
QUARTER = Fraction(1, 4)


class SweepError(RuntimeError):
    def __init__(self, n: int | None, message: str):
        super().__init__(message if n is None else f"n={n}: {message}")
        self.n = n


class SweepAssertionError(AssertionError):
    pass


@dataclass(frozen=True)
class SweepRecord:
    n: int
    num_vertices: int
    degree_weight: Fraction
    num_distinct_eigs: int
    lambda2_abs: float
    t_rel: float
    t_mix: dict[Fraction, int]
    t_hit: dict[Fraction, Fraction | None]
    quotient_states: int
    eigenvalues: tuple[float, ...] = ()
    multiplicities: tuple[int, ...] = ()
    second_branch: tuple[float, int] = (0.0, 0)
    full_checked: bool = False
    bounds_violations: tuple[str, ...] = ()
    hitting_ratios: dict[Fraction, Fraction | None] = field(default_factory=dict)

    def __post_init__(self):
        ordered = [self.t_mix[e] for e in sorted(self.t_mix)]
        if any(a < b for a, b in zip(ordered, ordered[1:])):
            raise SweepAssertionError(f"n={self.n}: t_mix increases with epsilon: {self.t_mix}")
        if not 0 <= self.lambda2_abs < 1 or self.t_rel < 1:
            raise SweepAssertionError(f"n={self.n}: lambda2_abs={self.lambda2_abs}, t_rel={self.t_rel} out of range")


def _spectra_agree(a: Spectrum, b: Spectrum, tol: float = 1e-7) -> bool:
    if a.multiplicities != b.multiplicities:
        return False
    return all(abs(x - y) <= tol for x, y in zip(a.eigenvalues, b.eigenvalues))


def _sweep_point(args) -> SweepRecord:
    spec, n, epsilons, alphas, laziness, cap_states, cap_hitting = args
    try:
        return sweep_point(spec, n, epsilons, alphas, laziness, cap_states, cap_hitting)
    except (SweepAssertionError, SweepError):
        raise
    except (ChainError, InstanceError, ArithmeticError) as exc:
        raise SweepError(n, f"{type(exc).__name__}: {exc}") from exc


def sweep_point(
    spec: FamilySpec,
    n: int,
    epsilons: Sequence,
    alphas: Sequence = (),
    laziness=0,
    cap_states: int = DEFAULT_FULL_CAP,
    cap_hitting: int = 15,
) -> SweepRecord:
    """All swept quantities at one ``n``, read off the orbit walk."""
    q = build_orbit_walk(spec, n, laziness)
    eps = sorted({Fraction(e) for e in epsilons} | {QUARTER})
    spec_full = full_spectrum_from_quotient(q)
    lam = spec_full.second_abs()
    t_rel = relaxation_time(spec_full)
    # the root start realises the worst case on the vertex-transitive full walk
    t_mix = mixing_times(q.base, 0, eps)

    full_checked = False
    if q.num_vertices <= cap_states:
        full = build_simple_walk(instantiate_graph(spec, n, cap_states), laziness)
        x = full.index_of(spec.root())
        t_full = mixing_times(full, x, eps)
        if t_full != t_mix:
            raise SweepAssertionError(f"n={n}: full-graph mixing {t_full} differs from orbit walk {t_mix}")
        if not _spectra_agree(spectrum(full), spec_full):
            raise SweepAssertionError(f"n={n}: full-graph spectrum differs from the one read off the orbit walk")
        full_checked = True

    violations = []
    for e in eps:
        b = mixing_bounds(e, t_mix[e], t_rel, Fraction(1, q.num_vertices))
        if not b.holds:
            violations.append(f"n={n} eps={e}: {b.lower:.6g} <= t_mix={b.t_mix} <= {b.upper:.6g} fails")

    t_hit: dict[Fraction, Fraction | None] = {}
    ratios: dict[Fraction, Fraction | None] = {}
    for a in sorted(Fraction(a) for a in alphas):
        try:
            t_hit[a] = large_set_hitting_time(q.base, a, cap_hitting).t_hit
        except HittingCapError:
            t_hit[a] = None
        ratios[a] = None if not t_hit[a] else Fraction(t_mix[QUARTER]) / t_hit[a]

    return SweepRecord(
        n=n,
        num_vertices=q.num_vertices,
        degree_weight=q.degree_weight,
        num_distinct_eigs=spec_full.num_distinct,
        lambda2_abs=lam,
        t_rel=t_rel,
        t_mix=t_mix,
        t_hit=t_hit,
        quotient_states=len(q),
        eigenvalues=spec_full.eigenvalues,
        multiplicities=spec_full.multiplicities,
        second_branch=spec_full.second_abs_branch(),
        full_checked=full_checked,
        bounds_violations=tuple(violations),
        hitting_ratios=ratios,
    )


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def sweep(
    spec: FamilySpec,
    n_range: Iterable[int],
    epsilons: Sequence = (QUARTER,),
    alphas: Sequence = (),
    laziness=0,
    cap_states: int = DEFAULT_FULL_CAP,
    cap_hitting: int = 15,
    workers: int | None = None,
) -> list[SweepRecord]:
    """One record per ``n``; the orbit state set is checked for stability first."""
    ns = sorted(set(n_range))
    if not ns:
        return []
    if ns[0] < spec.n_min:
        raise InstanceError(f"n={ns[0]} is below n_min={spec.n_min} for {spec.name}")
    if len(ns) > 1:
        report = verify_state_stability(spec, ns[0], ns[-1])
        if not report.stable:
            raise SweepError(report.first_disagreement, f"orbit states of {spec.name} change from n={ns[0]}")
    jobs = [(spec, n, tuple(epsilons), tuple(alphas), Fraction(laziness), cap_states, cap_hitting) for n in ns]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(job) for job in jobs]


def tail(records: Sequence[SweepRecord]) -> list[SweepRecord]:
    """The last half of the sweep, which stands in for ``n >> 0``."""
    return list(records[len(records) // 2 :])


# -- eigenvalue stabilisation ----------------------------------------------------


@dataclass(frozen=True)
class BranchFit:
    index: int
    value_fit: FitReport | None
    multiplicity_fit: FitReport | None


@dataclass(frozen=True)
class StabilizationReport:
    tail_start: int
    stable_count: int | None
    first_stable_n: int | None
    branches: tuple[BranchFit, ...]
    tracking_ok: bool
    second_multiplicity_fit: FitReport | None
    note: str = ""


def _branches_continuous(rows: Sequence[SweepRecord]) -> bool:
    for a, b in zip(rows, rows[1:]):
        vals = a.eigenvalues
        gap = min((x - y for x, y in zip(vals, vals[1:])), default=math.inf)
        if any(abs(x - y) > 0.5 * gap for x, y in zip(a.eigenvalues, b.eigenvalues)):
            return False
    return True


def _fit_degree(max_deg: int, points: int) -> int:
    return max(0, min(max_deg, (points - 3) // 2))


def stabilization_report(records: Sequence[SweepRecord], max_fit_degree: int = DEFAULT_MAX_FIT_DEGREE) -> StabilizationReport:
    if len(records) < 8:
        raise ValueError(f"stabilization_report needs at least 8 records, got {len(records)}")
    rows = tail(records)
    counts = {r.num_distinct_eigs for r in rows}
    stable = counts.pop() if len(counts) == 1 else None
    first = None
    if stable is not None:
        first = records[-1].n
        for r in reversed(records):
            if r.num_distinct_eigs != stable:
                break
            first = r.n

    second = _fit_or_none(fit_polynomial, [(r.n, r.second_branch[1]) for r in rows])
    if stable is None:
        return StabilizationReport(rows[0].n, None, None, (), False, second, "distinct-eigenvalue count not constant on tail")
    if not _branches_continuous(rows):
        return StabilizationReport(rows[0].n, stable, first, (), False, second, "eigenvalue branches cross; tracking aborted")
    deg = _fit_degree(max_fit_degree, len(rows))
    branches = []
    for i in range(stable):
        values = _fit_or_none(lambda pts: fit_rational_float(pts, deg), [(r.n, r.eigenvalues[i]) for r in rows])
        mults = _fit_or_none(fit_polynomial, [(r.n, r.multiplicities[i]) for r in rows])
        branches.append(BranchFit(i, values, mults))
    return StabilizationReport(rows[0].n, stable, first, tuple(branches), True, second)


def _fit_or_none(fitter, points):
    try:
        return fitter(points)
    except InsufficientPointsError:
        return None


# -- product condition -------------------------------------------------------------


@dataclass(frozen=True)
class ProductConditionRow:
    n: int
    r: float | None  # t_rel / t_mix
    s: float  # t_mix / t_rel
    bound: float  # log(|V| / eps)


@dataclass(frozen=True)
class ProductConditionReport:
    epsilon: Fraction
    rows: tuple[ProductConditionRow, ...]
    floor: float
    min_tail_ratio: float | None
    violations: tuple[str, ...]

    @property
    def bound_holds(self) -> bool:
        return all(r.s <= r.bound for r in self.rows)

    @property
    def floor_holds(self) -> bool:
        return self.min_tail_ratio is not None and self.min_tail_ratio >= self.floor

    @property
    def product_condition_failed(self) -> bool:
        """The bounded-ratio witness that ``t_rel = o(t_mix)`` does not hold."""
        return self.bound_holds and self.floor_holds


def product_condition_diagnostic(
    records: Sequence[SweepRecord], epsilon=QUARTER, floor: float = DEFAULT_PRODUCT_FLOOR
) -> ProductConditionReport:
    eps = Fraction(epsilon)
    if not records:
        raise ValueError("empty sweep")
    out, violations = [], []
    for rec in records:
        if eps not in rec.t_mix:
            raise ValueError(f"n={rec.n}: no t_mix recorded at eps={eps}")
        t = rec.t_mix[eps]
        r = rec.t_rel / t if t else None
        s = t / rec.t_rel
        bound = math.log(rec.num_vertices / eps)
        if s > bound:
            violations.append(f"n={rec.n}: t_mix/t_rel={s:.6g} exceeds log(|V|/eps)={bound:.6g}")
        out.append(ProductConditionRow(rec.n, r, s, bound))
    tail_rows = out[len(out) // 2 :]
    tail_r = [row.r for row in tail_rows if row.r is not None]
    min_r = min(tail_r) if tail_r else None
    if min_r is None:
        violations.append("t_mix is 0 on the whole tail; ratio undefined")
    elif min_r < floor:
        at = next(row.n for row in tail_rows if row.r == min_r)
        violations.append(f"n={at}: tail ratio t_rel/t_mix={min_r:.6g} below floor {floor}")
    return ProductConditionReport(eps, tuple(out), floor, min_r, tuple(violations))


# -- cutoff profile ----------------------------------------------------------------


@dataclass(frozen=True)
class CutoffReport:
    epsilon: Fraction
    ratios: tuple[tuple[int, Fraction], ...]
    excluded: tuple[int, ...]
    eventually_constant: bool
    tail_ratio: Fraction | None
    cutoff_consistent: bool


def eventually_constant(records: Sequence[SweepRecord], epsilons: Iterable | None = None) -> bool:
    rows = tail(records)
    if not rows:
        return False
    keys = rows[0].t_mix.keys() if epsilons is None else [Fraction(e) for e in epsilons]
    return all(len({r.t_mix[e] for r in rows}) == 1 for e in keys)


def cutoff_profile(records: Sequence[SweepRecord], eps_small) -> CutoffReport:
    """Ratios ``t_mix(eps) / t_mix(1 - eps)`` and the cutoff classification."""
    eps = Fraction(eps_small)
    if not 0 < eps < Fraction(1, 2):
        raise ValueError(f"eps_small must lie in (0, 1/2), got {eps}")
    ratios, excluded = [], []
    for rec in records:
        if eps not in rec.t_mix or 1 - eps not in rec.t_mix:
            raise ValueError(f"n={rec.n}: need t_mix at {eps} and {1 - eps}")
        den = rec.t_mix[1 - eps]
        if den == 0:
            excluded.append(rec.n)
        else:
            ratios.append((rec.n, Fraction(rec.t_mix[eps], den)))
    constant = eventually_constant(records)
    tail_ns = {r.n for r in tail(records)}
    tail_vals = [v for n, v in ratios if n in tail_ns]
    tail_ratio = tail_vals[-1] if tail_vals else None
    consistent = (
        not constant
        and len(tail_vals) >= 2
        and all(a >= b for a, b in zip(tail_vals, tail_vals[1:]))
        and tail_vals[0] > tail_vals[-1]
        and tail_ratio <= CUTOFF_TAIL_THRESHOLD
    )
    return CutoffReport(eps, tuple(ratios), tuple(excluded), constant, tail_ratio, consistent)


def growth_ratios(records: Sequence[SweepRecord], epsilon=QUARTER) -> list[tuple[int, Fraction]]:
    """``t_mix(2n) / t_mix(n)`` for every ``n`` whose double lies in the sweep tail."""
    eps = Fraction(epsilon)
    by_n = {r.n: r for r in records}
    tail_ns = {r.n for r in tail(records)}
    out = []
    for n in sorted(by_n):
        if 2 * n in tail_ns and by_n[n].t_mix[eps]:
            out.append((n, Fraction(by_n[2 * n].t_mix[eps], by_n[n].t_mix[eps])))
    return out


# -- verdict -------------------------------------------------------------------------


def verdict(
    spec: FamilySpec,
    records: Sequence[SweepRecord],
    floor: float = DEFAULT_PRODUCT_FLOOR,
    max_fit_degree: int = DEFAULT_MAX_FIT_DEGREE,
) -> dict:
    """The JSON-shaped verdict document, with the list of failed assertions."""
    if not records:
        raise ValueError("empty sweep")
    failures: list[str] = []
    bounds = [v for r in records for v in r.bounds_violations]
    failures += bounds

    stab = stabilization_report(records, max_fit_degree) if len(records) >= 8 else None
    product = product_condition_diagnostic(records, QUARTER, floor)
    failures += list(product.violations)

    eps_grid = sorted(e for e in records[0].t_mix if e < Fraction(1, 2) and 1 - e in records[0].t_mix)
    profiles = [cutoff_profile(records, e) for e in eps_grid]
    cutoff_flag = bool(profiles) and all(p.cutoff_consistent for p in profiles)

    # positivity and finiteness are asserted; the window is reported only
    windows = {}
    for a in records[0].hitting_ratios:
        vals = [r.hitting_ratios[a] for r in records]
        if all(v is None for v in vals):
            windows[str(a)] = None
            continue
        w = ratio_window(vals)
        windows[str(a)] = None if w is None else str(w)
        if w is None:
            failures.append(f"alpha={a}: mixing/hitting ratio missing or zero at some n")

    mult = stab.second_multiplicity_fit if stab else None
    return {
        "family": spec.name,
        "n_range": [records[0].n, records[-1].n],
        "tail_start": tail(records)[0].n,
        "stable_eig_count": stab.stable_count if stab else None,
        "first_stable_n": stab.first_stable_n if stab else None,
        "branch_tracking": (stab.note or "ok") if stab else "fewer than 8 records",
        "eigenvalue_branches": [
            {
                "index": b.index,
                "value": b.value_fit.to_json() if b.value_fit else None,
                "multiplicity": b.multiplicity_fit.to_json() if b.multiplicity_fit else None,
            }
            for b in (stab.branches if stab else ())
        ],
        "multiplicity_fit": mult.to_json() if mult else None,
        "multiplicity_degree": mult.degree if mult and mult.exact else None,
        "product_condition_failed": product.product_condition_failed,
        "product_floor": floor,
        "min_tail_ratio_trel_over_tmix": product.min_tail_ratio,
        "eventually_constant_mixing": eventually_constant(records),
        "cutoff_flag": cutoff_flag,
        "cutoff_epsilon_grid": [str(e) for e in eps_grid],
        "cutoff_tail_ratios": {str(p.epsilon): None if p.tail_ratio is None else str(p.tail_ratio) for p in profiles},
        "growth_ratios": {str(n): str(v) for n, v in growth_ratios(records)},
        "hitting_ratio_windows": windows,
        "hitting_window_ok": all(w is None or Fraction(w) <= HITTING_WINDOW for w in windows.values()),
        "bounds_violations": bounds,
        "failures": failures,
    }
