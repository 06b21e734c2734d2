"""Acceptance criteria, one marked group of tests per criterion.

The terminal summary prints one PASS/FAIL line per criterion number.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from fiwalks.catalog import BUILTINS, DEFAULT_INSTANCES, builtin_entry, builtin_family, is_worked_example
from fiwalks.chain import (
    Chain,
    bipartite_test,
    build_simple_walk,
    mixing_times,
    relaxation_time,
    spectrum,
)
from fiwalks.family import instantiate_graph
from fiwalks.fitting import fit_polynomial, fit_rational, fit_rational_float
from fiwalks.hitting import _first_step_solution, expected_hitting_times, ratio_window
from fiwalks.quotient import (
    build_orbit_walk,
    full_spectrum_from_quotient,
    limiting_stationary,
    verify_lumping,
    verify_state_stability,
)
from fiwalks.ratfunc import RationalFunction
from fiwalks.stabilization import (
    eventually_constant,
    growth_ratios,
    product_condition_diagnostic,
    sweep,
    tail,
    verdict,
)

F = Fraction
QUARTER = F(1, 4)
ALPHA = F(1, 8)
BASE_EPS = (F(1, 4), F(1, 10), F(1, 100))
EPS_GRID = tuple(sorted(set(BASE_EPS) | {1 - e for e in BASE_EPS}))
SWEEP = range(10, 41)
FULL_CAP = 300
EXHAUSTIVE_HITTING = 15
HITTING_STEP = 10
LONG_SWEEP = range(600, 1601, 25)
GROWTH_BAND = (1.6, 2.4)

INSTANCES = [pytest.param(name, params, id="-".join([name, *map(str, params)])) for name, params in DEFAULT_INSTANCES]
KNESER2 = builtin_family("kneser", (2,))
COMPLETE = builtin_family("complete")
TRIPLE = builtin_family("triple-replace-one")
EQUALITY_CASES = [(KNESER2, range(5, 13)), (COMPLETE, range(5, 31)), (TRIPLE, range(7, 10))]
EQUALITY_PARAMS = [pytest.param(spec, n, id=f"{spec.name}-{n}") for spec, ns in EQUALITY_CASES for n in ns]


def criterion(number: int, title: str):
    return pytest.mark.criterion(number, title)


_sweeps: dict[tuple[str, tuple[int, ...]], list] = {}


def family_sweep(name: str, params: tuple[int, ...]):
    """The 10..40 sweep of one built-in family, shared by several criteria."""
    key = (name, params)
    if key not in _sweeps:
        spec = builtin_family(name, params)
        small = len(build_orbit_walk(spec, SWEEP[0])) <= EXHAUSTIVE_HITTING
        _sweeps[key] = sweep(spec, SWEEP, EPS_GRID, (ALPHA,) if small else (), cap_states=FULL_CAP)
    return _sweeps[key]


def petersen_oracle() -> np.ndarray:
    pairs = list(combinations(range(5), 2))
    adj = np.array([[0.0 if set(a) & set(b) else 1.0 for b in pairs] for a in pairs])
    return adj / 3


# -- 1 --------------------------------------------------------------------------------


@criterion(1, "complete graph: t_rel = (n-1)/(n-2), t_mix(1/4) = t_mix(1/100) = 1 for n >= 9")
def test_c1_complete_relaxation_time_exact():
    target = RationalFunction([-1, 1], [-2, 1])
    for n in range(5, 41):
        p = build_orbit_walk(COMPLETE, n).base.dense()
        # the orbit walk is 2x2 with eigenvalues 1 and trace - 1
        lam = p[0][0] + p[1][1] - 1
        assert lam == F(-1, n - 1)
        assert 1 / (1 - abs(lam)) == target(n)
    records = sweep(COMPLETE, range(5, 41), BASE_EPS, cap_states=0)
    fit = fit_rational_float([(r.n, r.t_rel) for r in records], 3)
    assert fit.exact and fit.fitted == target


@criterion(1, "complete graph: t_rel = (n-1)/(n-2), t_mix(1/4) = t_mix(1/100) = 1 for n >= 9")
def test_c1_complete_quarter_mixing_is_one_step():
    records = sweep(COMPLETE, range(9, 41), BASE_EPS, cap_states=0)
    assert all(r.t_mix[QUARTER] == 1 for r in records)


@criterion(1, "complete graph: t_rel = (n-1)/(n-2), t_mix(1/4) = t_mix(1/100) = 1 for n >= 9")
def test_c1_complete_one_percent_mixing_is_one_step():
    records = sweep(COMPLETE, range(9, 41), BASE_EPS, cap_states=0)
    slow = {r.n: r.t_mix[F(1, 100)] for r in records if r.t_mix[F(1, 100)] != 1}
    assert slow == {}, f"t_mix(1/100) != 1 at {slow}"


# -- 2 --------------------------------------------------------------------------------


@criterion(2, "Petersen spectrum {1, 1/3 (x5), -2/3 (x4)} and t_rel = 3")
def test_c2_petersen():
    s = spectrum(build_simple_walk(instantiate_graph(KNESER2, 5)))
    oracle = np.linalg.eigvalsh(petersen_oracle())
    assert s.multiplicities == (1, 5, 4)
    assert np.allclose(s.eigenvalues, [1, 1 / 3, -2 / 3], atol=1e-9, rtol=0)
    for value, mult in zip(s.eigenvalues, s.multiplicities):
        assert np.sum(np.abs(oracle - value) <= 1e-9) == mult
    assert abs(relaxation_time(s) - 3) <= 1e-9


# -- 3 --------------------------------------------------------------------------------


@criterion(3, "full-graph and orbit-walk mixing times agree exactly")
@pytest.mark.parametrize("spec,n", EQUALITY_PARAMS)
def test_c3_mixing_equality(spec, n):
    full = build_simple_walk(instantiate_graph(spec, n))
    q = build_orbit_walk(spec, n)
    assert mixing_times(full, full.index_of(spec.root()), BASE_EPS) == mixing_times(q.base, 0, BASE_EPS)


# -- 4 --------------------------------------------------------------------------------


@criterion(4, "lumping identity holds exactly for t <= 50")
@pytest.mark.parametrize("spec,n", EQUALITY_PARAMS)
def test_c4_lumping(spec, n):
    report = verify_lumping(spec, n, 50, check=False)
    assert report.class_sizes_match
    assert report.max_discrepancy == 0


# -- 5 --------------------------------------------------------------------------------


@criterion(5, "orbit states stable and every entry an exact rational function of degree <= 2k")
@pytest.mark.parametrize("name,params", INSTANCES)
def test_c5_quotient_rationality(name, params):
    spec = builtin_family(name, params)
    assert verify_state_stability(spec, SWEEP[0], SWEEP[-1]).stable
    mats = {n: build_orbit_walk(spec, n).base.dense() for n in SWEEP}
    size = len(mats[SWEEP[0]])
    for i in range(size):
        for j in range(size):
            fit = fit_rational([(n, mats[n][i][j]) for n in SWEEP], 2 * spec.k)
            assert fit.exact and len(fit.validation_points) == 3, (i, j)
            assert max(fit.degrees) <= 2 * spec.k


# -- 6 --------------------------------------------------------------------------------


@criterion(6, "Kneser disjoint-state stationary mass (n-2)(n-3)/(n(n-1)), limit on the disjoint state")
def test_c6_limiting_stationary():
    probes = list(range(5, 41))
    report = limiting_stationary(KNESER2, probes)
    for n in probes:
        assert report.disjoint_mass[n] == F((n - 2) * (n - 3), n * (n - 1))
    assert report.disjoint_mass[40] > F(9, 10)
    disjoint = [i for i, p in enumerate(report.states) if p.size == 0]
    assert report.limit == tuple(int(i in disjoint) for i in range(len(report.states)))


# -- 7 --------------------------------------------------------------------------------


@criterion(7, "no built-in walk is bipartite; the 6-cycle is")
@pytest.mark.parametrize("name,params", INSTANCES)
def test_c7_not_bipartite(name, params):
    spec = builtin_family(name, params)
    for n in range(spec.n_min, SWEEP[-1] + 1):
        assert not bipartite_test(full_spectrum_from_quotient(build_orbit_walk(spec, n))), n


@criterion(7, "no built-in walk is bipartite; the 6-cycle is")
def test_c7_six_cycle():
    half = F(1, 2)
    rows = [{(i - 1) % 6: half, (i + 1) % 6: half} for i in range(6)]
    assert bipartite_test(spectrum(Chain.from_rows(list(range(6)), rows)))


# -- 8 --------------------------------------------------------------------------------


@criterion(8, "second-branch multiplicity: n - 1 for Kneser, growing for every family")
def test_c8_kneser_multiplicity():
    points = [(n, full_spectrum_from_quotient(build_orbit_walk(KNESER2, n)).second_abs_branch()[1])
              for n in range(6, 15)]
    fit = fit_polynomial(points)
    assert fit.exact and len(fit.validation_points) == 2
    assert fit.fitted == (F(-1), F(1))


@criterion(8, "second-branch multiplicity: n - 1 for Kneser, growing for every family")
@pytest.mark.parametrize("name,params", INSTANCES)
def test_c8_multiplicity_grows(name, params):
    v = verdict(builtin_family(name, params), family_sweep(name, params))
    assert v["multiplicity_fit"]["exact"]
    assert v["multiplicity_degree"] >= 1


# -- 9 --------------------------------------------------------------------------------


@criterion(9, "distinct-eigenvalue count: 3 for Kneser (n >= 5), 2 for complete (n >= 3)")
@pytest.mark.parametrize("spec,n_lo,count", [(KNESER2, 5, 3), (COMPLETE, 3, 2)], ids=["kneser-2", "complete"])
def test_c9_distinct_eigenvalues(spec, n_lo, count):
    for n in range(n_lo, SWEEP[-1] + 1):
        assert full_spectrum_from_quotient(build_orbit_walk(spec, n)).num_distinct == count, n


# -- 10 -------------------------------------------------------------------------------


@criterion(10, "relaxation/mixing sandwich holds for every chain built in the suite")
@pytest.mark.run_last
def test_c10_sandwich_everywhere(chain_ledger):
    assert chain_ledger.checked > 0
    assert chain_ledger.failures == []


# -- 11 -------------------------------------------------------------------------------


def _random_cases(rng: random.Random, count: int):
    families = [builtin_family(name, params) for name, params in DEFAULT_INSTANCES]
    for case in range(count):
        if case % 4 == 3:
            m = rng.randint(3, 8)
            w = [[0] * m for _ in range(m)]
            for i in range(m):
                for j in range(i, m):
                    w[i][j] = w[j][i] = rng.randint(0, 6) if i != j else rng.randint(0, 2)
                w[i][(i + 1) % m] = w[(i + 1) % m][i] = max(1, w[i][(i + 1) % m])
            chain = Chain.from_matrix([[F(x, sum(row)) for x in row] for row in w])
        else:
            spec = rng.choice(families)
            chain = build_orbit_walk(spec, rng.randint(spec.n_min, spec.n_min + 10), F(rng.randint(0, 2), 4)).base
        size = len(chain)
        target = rng.sample(range(size), rng.randint(1, size - 1))
        yield chain, target


@criterion(11, "hitting: exact first-step residuals, E[tau_root] = n - 1 on K_n, ratio window <= 10")
def test_c11_first_step_residuals():
    for chain, target in _random_cases(random.Random(0), 100):
        q = expected_hitting_times(chain, target)
        for i in range(len(chain)):
            if i in target:
                assert q[i] == 0
            else:
                assert q[i] - 1 - sum(p * q[j] for j, p in chain.rows[i].items()) == 0
        assert q == _first_step_solution(chain, frozenset(target))


@criterion(11, "hitting: exact first-step residuals, E[tau_root] = n - 1 on K_n, ratio window <= 10")
def test_c11_complete_return_time():
    for n in range(5, 31):
        assert expected_hitting_times(build_orbit_walk(COMPLETE, n).base, [0])[1] == n - 1


@criterion(11, "hitting: exact first-step residuals, E[tau_root] = n - 1 on K_n, ratio window <= 10")
@pytest.mark.parametrize("name,params", INSTANCES)
def test_c11_ratio_window(name, params):
    records = family_sweep(name, params)
    if ALPHA not in records[0].hitting_ratios:
        # orbit walks beyond the exhaustive cap go through branch and bound on a coarser grid
        records = sweep(builtin_family(name, params), range(SWEEP[0], SWEEP[-1] + 1, HITTING_STEP),
                        (QUARTER,), (ALPHA,), cap_states=0)
    ratios = [r.hitting_ratios[ALPHA] for r in records]
    assert all(r is not None and r > 0 for r in ratios)
    assert ratio_window(ratios) <= 10


# -- 12 -------------------------------------------------------------------------------


@criterion(12, "product condition fails: bounded t_mix/t_rel, tail ratio above the floor, no cutoff")
@pytest.mark.parametrize("name,params", INSTANCES)
def test_c12_no_product_condition(name, params):
    spec = builtin_family(name, params)
    records = family_sweep(name, params)
    floor = builtin_entry(spec.name).product_floor
    diag = product_condition_diagnostic(records, QUARTER, floor)
    for row in diag.rows:
        assert row.s <= math.log(4 * _vertices(records, row.n))
    assert diag.min_tail_ratio >= floor
    v = verdict(spec, records, floor)
    assert v["product_condition_failed"] is True
    assert v["cutoff_flag"] is False
    assert v["bounds_violations"] == []


def _vertices(records, n):
    return next(r.num_vertices for r in records if r.n == n)


# -- 13 -------------------------------------------------------------------------------

UNWEIGHTED_WORKED = [p for p in INSTANCES if is_worked_example(*p.values) and BUILTINS[p.values[0]].growth == "constant"]
WEIGHTED_WORKED = [pytest.param("ordered-pair-weighted", (), id="ordered-pair-weighted"),
               pytest.param("triple-weighted", (), id="triple-weighted")]


@criterion(13, "growth classes: constant mixing when unweighted, linear when weighted")
@pytest.mark.parametrize("name,params", UNWEIGHTED_WORKED)
def test_c13_unweighted_constant(name, params):
    records = sweep(builtin_family(name, params), LONG_SWEEP, EPS_GRID, cap_states=0)
    assert eventually_constant(records)


@criterion(13, "growth classes: constant mixing when unweighted, linear when weighted")
@pytest.mark.parametrize("name,params", WEIGHTED_WORKED)
def test_c13_weighted_linear(name, params):
    records = family_sweep(name, params)
    ratios = growth_ratios(records, QUARTER)
    assert [n for n, _ in ratios] == [n for n in SWEEP if 2 * n in {r.n for r in tail(records)}]
    assert ratios
    for n, value in ratios:
        assert GROWTH_BAND[0] <= value <= GROWTH_BAND[1], (n, value)
