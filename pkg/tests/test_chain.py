from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from fiwalks.catalog import builtin_family
from fiwalks.chain import (
    Chain,
    ChainError,
    HorizonExceededError,
    MixingBoundsError,
    PeriodicChainError,
    bipartite_test,
    build_simple_walk,
    mixing_profile,
    mixing_time,
    mixing_times,
    relaxation_time,
    spectrum,
    tv_distance,
    verify_mixing_bounds,
    worst_case_mixing_times,
)
from fiwalks.family import instantiate_graph

# frozen from the float row-powering oracle on the brute-force Petersen matrix
PETERSEN_TMIX = {Fraction(1, 4): 4, Fraction(1, 10): 6, Fraction(1, 100): 11}


def petersen_matrix() -> np.ndarray:
    pairs = list(combinations(range(5), 2))
    adj = np.array([[0.0 if set(a) & set(b) else 1.0 for b in pairs] for a in pairs])
    return adj / 3


def walk(name, n, params=(), laziness=0):
    return build_simple_walk(instantiate_graph(builtin_family(name, params), n), laziness)


def cycle(m: int) -> Chain:
    rows = [{(i - 1) % m: Fraction(1, 2), (i + 1) % m: Fraction(1, 2)} for i in range(m)]
    return Chain.from_rows(list(range(m)), rows)


def two_state(a, b) -> Chain:
    a, b = Fraction(a), Fraction(b)
    return Chain.from_matrix([[1 - a, a], [b, 1 - b]])


class TestConstruction:
    def test_k4(self):
        c = walk("complete", 4)
        assert all(p == Fraction(1, 3) for row in c.rows for p in row.values())
        assert c.stationary == (Fraction(1, 4),) * 4

    def test_k4_lazy(self):
        c = walk("complete", 4, laziness=Fraction(1, 2))
        assert c.entry(0, 0) == Fraction(1, 2)
        assert c.entry(0, 1) == Fraction(1, 6)

    def test_petersen_rows(self):
        c = walk("kneser", 5, (2,))
        assert all(sorted(row.values()) == [Fraction(1, 3)] * 3 for row in c.rows)
        assert np.allclose(c.to_numpy(), petersen_matrix())

    def test_bad_rows(self):
        with pytest.raises(ChainError):
            Chain.from_matrix([[Fraction(1, 2), Fraction(1, 3)], [0, 1]])
        with pytest.raises(ChainError):
            Chain.from_matrix([[2, -1], [0, 1]])

    def test_non_reversible_rejected(self):
        third = Fraction(1, 3)
        rows = [[0, 2 * third, third], [third, 0, 2 * third], [2 * third, third, 0]]
        with pytest.raises(ChainError, match="detailed balance"):
            Chain.from_matrix(rows)

    def test_bad_laziness(self):
        with pytest.raises(ChainError):
            walk("complete", 4, laziness=1)

    def test_weighted_stationary_is_exact(self):
        c = two_state(Fraction(1, 3), Fraction(1, 6))
        assert c.stationary == (Fraction(1, 3), Fraction(2, 3))


class TestDistances:
    def test_tv_examples(self):
        assert tv_distance([Fraction(1, 3)] * 3, [Fraction(1, 3)] * 3) == 0
        assert tv_distance([1, 0, 0, 0, 0], [Fraction(1, 5)] * 5) == Fraction(4, 5)
        half = Fraction(1, 2)
        assert tv_distance([half, half, 0], [0, half, half]) == half

    def test_tv_mismatch(self):
        with pytest.raises(ValueError):
            tv_distance([1], [Fraction(1, 2), Fraction(1, 2)])


class TestMixing:
    @pytest.mark.parametrize("n", [9, 12, 20])
    def test_complete_mixes_in_one_step(self, n):
        assert mixing_time(walk("complete", n), epsilon=Fraction(1, 4)) == 1

    def test_complete_tv_after_one_step(self):
        # after one step the walk is uniform off the start: TV = 1/n
        for n in (5, 9, 40):
            profile = mixing_profile(walk("complete", n), 0, 3)
            assert profile.distances[1] == Fraction(1, n)
            assert profile.distances[2] == Fraction(1, n * (n - 1))

    def test_complete_strict_one_percent_needs_n_at_least_100(self):
        assert mixing_time(walk("complete", 99), epsilon=Fraction(1, 100)) == 2
        assert mixing_time(walk("complete", 100), epsilon=Fraction(1, 100)) == 1

    def test_stationary_start(self):
        c = Chain.from_matrix([[Fraction(1, 2), Fraction(1, 2)], [Fraction(1, 2), Fraction(1, 2)]])
        assert mixing_time(c, 0, Fraction(1, 100)) == 1
        c = Chain.from_matrix([[1]])
        assert mixing_time(c, 0, Fraction(1, 100)) == 0

    def test_petersen_frozen(self):
        c = walk("kneser", 5, (2,))
        assert mixing_times(c, 0, list(PETERSEN_TMIX)) == PETERSEN_TMIX
        assert worst_case_mixing_times(c, list(PETERSEN_TMIX)) == PETERSEN_TMIX

    def test_petersen_float_oracle(self):
        p = petersen_matrix()
        v = np.eye(10)[0]
        for t in range(PETERSEN_TMIX[Fraction(1, 100)] + 1):
            d = 0.5 * np.abs(v - 0.1).sum()
            for eps, t_star in PETERSEN_TMIX.items():
                assert (d <= eps) == (t >= t_star)
            v = v @ p

    def test_transitive_start_equals_worst_case(self):
        c = walk("johnson", 7, (3,))
        eps = [Fraction(1, 4), Fraction(1, 100)]
        transitive = worst_case_mixing_times(c, eps)
        exhaustive = {e: max(mixing_times(c, s, [e])[e] for s in range(len(c))) for e in eps}
        assert transitive == exhaustive

    def test_periodic_chain_refused(self):
        with pytest.raises(PeriodicChainError):
            mixing_time(cycle(6), 0)

    def test_horizon(self):
        slow = two_state(Fraction(1, 1000), Fraction(1, 1000))
        with pytest.raises(HorizonExceededError):
            mixing_time(slow, 0, Fraction(1, 100), max_t=5)

    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            mixing_time(walk("complete", 5), 0, Fraction(1))

    def test_lazy_profile_monotone(self):
        c = walk("kneser", 7, (2,), laziness=Fraction(1, 2))
        d = mixing_profile(c, 0, 30).distances
        assert all(a >= b for a, b in zip(d, d[1:]))


class TestSpectrum:
    def test_petersen(self):
        s = spectrum(walk("kneser", 5, (2,)))
        assert s.multiplicities == (1, 5, 4)
        assert np.allclose(s.eigenvalues, [1, 1 / 3, -2 / 3], atol=1e-9)
        oracle = np.sort(np.linalg.eigvalsh(petersen_matrix()))[::-1]
        assert np.allclose(sorted(s.eigenvalues, reverse=True), sorted(set(np.round(oracle, 9)), reverse=True))
        assert relaxation_time(s) == pytest.approx(3, abs=1e-9)
        assert not bipartite_test(s)

    def test_k5(self):
        s = spectrum(walk("complete", 5))
        assert s.multiplicities == (1, 4)
        assert s.eigenvalues[1] == pytest.approx(-0.25)

    @pytest.mark.parametrize("n", [5, 8, 13])
    def test_complete_relaxation(self, n):
        assert relaxation_time(spectrum(walk("complete", n))) == pytest.approx((n - 1) / (n - 2), abs=1e-12)

    def test_two_state(self):
        a, b = Fraction(1, 5), Fraction(1, 3)
        s = spectrum(two_state(a, b))
        assert s.eigenvalues == pytest.approx((1.0, float(1 - a - b)))
        assert relaxation_time(spectrum(two_state(Fraction(1, 2), Fraction(1, 2)))) == pytest.approx(1)

    def test_single_state_has_no_relaxation_time(self):
        with pytest.raises(ChainError):
            relaxation_time(spectrum(Chain.from_matrix([[1]])))

    def test_bipartite(self):
        assert bipartite_test(spectrum(cycle(6)))
        assert bipartite_test(spectrum(Chain.from_matrix([[0, 1], [1, 0]])))
        assert not bipartite_test(spectrum(cycle(5)))

    def test_aperiodicity_guard_agrees_with_spectrum(self):
        for c in (cycle(6), cycle(5), walk("kneser", 5, (2,)), walk("complete", 4)):
            assert c.is_aperiodic() == (not bipartite_test(spectrum(c)))


class TestBounds:
    def test_k10(self):
        r = verify_mixing_bounds(walk("complete", 10), Fraction(1, 4))
        assert r.t_mix == 1
        assert r.lower == pytest.approx((9 / 8 - 1) * math.log(2), abs=1e-6)
        assert r.upper == pytest.approx(9 / 8 * math.log(40), abs=1e-6)
        assert r.holds

    def test_petersen(self):
        r = verify_mixing_bounds(walk("kneser", 5, (2,)), Fraction(1, 4))
        assert r.t_rel == pytest.approx(3)
        assert r.pi_min == Fraction(1, 10)
        assert r.holds

    def test_half_gives_zero_lower_bound(self):
        r = verify_mixing_bounds(walk("johnson", 6, (2,)), Fraction(1, 2))
        assert r.lower <= 0 <= r.t_mix

    def test_violation_raises(self):
        from fiwalks.chain import mixing_bounds

        bad = mixing_bounds(Fraction(1, 4), 100, 2.0, Fraction(1, 10))
        assert not bad.holds
        with pytest.raises(MixingBoundsError):
            # a doctored check: pretend t_rel is tiny
            import fiwalks.chain as chain_mod

            original = chain_mod.relaxation_time
            chain_mod.relaxation_time = lambda s: 1.0001
            try:
                verify_mixing_bounds(walk("kneser", 5, (2,)), Fraction(1, 100))
            finally:
                chain_mod.relaxation_time = original
