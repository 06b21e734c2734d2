"""Exact reversible Markov chains: construction, TV distance, mixing, spectra."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Hashable, Iterator, Mapping, Sequence

import numpy as np

from .family import GraphInstance
from .linalg import solve

DEFAULT_CLUSTER_TOL = 1e-8
DEFAULT_HORIZON = 10**6


class ChainError(ValueError):
    pass


class PeriodicChainError(ChainError):
    pass


class HorizonExceededError(ChainError):
    pass


class MixingBoundsError(AssertionError):
    pass


@dataclass(frozen=True, eq=False)
class Chain:
    """Finite reversible chain with exact rational transitions.

    ``rows[i]`` maps column index to the (nonzero) probability ``P(i, j)``.
    """

    states: tuple[Hashable, ...]
    rows: tuple[dict[int, Fraction], ...]
    stationary: tuple[Fraction, ...]
    laziness: Fraction = Fraction(0)
    transitive: bool = False

    def __len__(self):
        return len(self.states)

    @classmethod
    def from_rows(
        cls,
        states: Sequence[Hashable],
        rows: Sequence[Mapping[int, Fraction]],
        stationary: Sequence[Fraction] | None = None,
        laziness=0,
        transitive: bool = False,
    ) -> "Chain":
        clean = tuple({j: _frac(p) for j, p in row.items() if p != 0} for row in rows)
        size = len(clean)
        if len(states) != size:
            raise ChainError("state labels and rows differ in length")
        for i, row in enumerate(clean):
            if any(p < 0 for p in row.values()) or any(not 0 <= j < size for j in row):
                raise ChainError(f"row {i} has a negative or out-of-range entry")
        if stationary is None:
            stationary = stationary_distribution(clean)
        chain = cls(tuple(states), clean, tuple(_frac(x) for x in stationary), Fraction(laziness), transitive)
        den, int_rows = chain.integer_form
        for i, row in enumerate(int_rows):
            total = sum(a for _, a in row)
            if total != den:
                raise ChainError(f"row {i} sums to {Fraction(total, den)}, not 1")
        chain.check_stationary()
        chain.check_reversible()
        return chain

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence], states: Sequence[Hashable] | None = None, **kwargs) -> "Chain":
        rows = [{j: Fraction(p) for j, p in enumerate(row) if p != 0} for row in matrix]
        return cls.from_rows(list(range(len(rows))) if states is None else states, rows, **kwargs)

    def check_stationary(self) -> None:
        sden, pi = self._stationary_ints
        if any(x <= 0 for x in pi) or sum(pi) != sden:
            raise ChainError("stationary vector must be positive and sum to 1")
        den, rows = self.integer_form
        out = [0] * len(pi)
        for i, row in enumerate(rows):
            for j, a in row:
                out[j] += pi[i] * a
        if any(o != den * x for o, x in zip(out, pi)):
            raise ChainError("stationary vector is not invariant under the transition matrix")

    def check_reversible(self) -> None:
        _, pi = self._stationary_ints
        _, rows = self.integer_form
        lookup = [dict(row) for row in rows]
        for i, row in enumerate(rows):
            for j, a in row:
                if pi[i] * a != pi[j] * lookup[j].get(i, 0):
                    raise ChainError(f"detailed balance fails between states {self.states[i]} and {self.states[j]}")

    def entry(self, i: int, j: int) -> Fraction:
        return self.rows[i].get(j, Fraction(0))

    def dense(self) -> list[list[Fraction]]:
        size = len(self)
        return [[row.get(j, Fraction(0)) for j in range(size)] for row in self.rows]

    def to_numpy(self) -> np.ndarray:
        out = np.zeros((len(self), len(self)))
        for i, row in enumerate(self.rows):
            for j, p in row.items():
                out[i, j] = float(p)
        return out

    @cached_property
    def integer_form(self) -> tuple[int, tuple[tuple[tuple[int, int], ...], ...]]:
        """``(D, A)`` with integer sparse rows ``A`` and ``P = A / D``."""
        den = lcm(*{p.denominator for row in self.rows for p in row.values()})
        rows = tuple(
            tuple((j, p.numerator * (den // p.denominator)) for j, p in sorted(row.items())) for row in self.rows
        )
        return den, rows

    @cached_property
    def _stationary_ints(self) -> tuple[int, tuple[int, ...]]:
        den = lcm(*{x.denominator for x in self.stationary})
        return den, tuple(x.numerator * (den // x.denominator) for x in self.stationary)

    def index_of(self, state: Hashable) -> int:
        return self.states.index(state)

    def is_aperiodic(self) -> bool:
        """A connected reversible chain is aperiodic iff its support is not bipartite."""
        if any(i in row for i, row in enumerate(self.rows)):
            return True
        colour = {0: 0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in self.rows[i]:
                if j not in colour:
                    colour[j] = 1 - colour[i]
                    queue.append(j)
                elif colour[j] == colour[i]:
                    return True
        return False

    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j in self.rows[i]:
                if j not in seen:
                    seen.add(j)
                    queue.append(j)
        return len(seen) == len(self)


def _frac(x) -> Fraction:
    return x if type(x) is Fraction else Fraction(x)


def stationary_distribution(rows: Sequence[Mapping[int, Fraction]]) -> list[Fraction]:
    """Exact solve of ``pi P = pi`` with ``sum(pi) = 1``."""
    size = len(rows)
    # columns of (P^T - I), last equation replaced by normalisation
    a = [[Fraction(0)] * size for _ in range(size)]
    for i, row in enumerate(rows):
        for j, p in row.items():
            a[j][i] += p
    for i in range(size):
        a[i][i] -= 1
    a[-1] = [Fraction(1)] * size
    b = [Fraction(0)] * (size - 1) + [Fraction(1)]
    return solve(a, b)


def build_simple_walk(instance: GraphInstance, laziness=0) -> Chain:
    """Weighted (simple when all weights are 1) walk, optionally lazy."""
    lazy = Fraction(laziness)
    if not 0 <= lazy < 1:
        raise ChainError(f"laziness must lie in [0, 1), got {lazy}")
    step = (1 - lazy) / instance.degree_weight
    probs = [w * step for w in instance.weights]
    rows = []
    for i, nb in enumerate(instance.neighbours):
        row = {j: probs[c] for j, c in nb.items()}
        if lazy:
            row[i] = lazy
        rows.append(row)
    size = len(instance.vertices)
    uniform = [Fraction(1, size)] * size
    return Chain.from_rows(instance.vertices, rows, uniform, lazy, transitive=True)


def tv_distance(mu: Sequence, nu: Sequence) -> Fraction:
    if len(mu) != len(nu):
        raise ValueError(f"distributions have different lengths {len(mu)} and {len(nu)}")
    return sum((abs(Fraction(a) - Fraction(b)) for a, b in zip(mu, nu)), Fraction(0)) / 2


def distribution_powers(chain: Chain, start: int) -> Iterator[tuple[list[int], int]]:
    """Yield ``(v, scale)`` with ``P^t(start, .) = v / scale`` for t = 0, 1, ..."""
    den, rows = chain.integer_form
    size = len(chain)
    v = [0] * size
    v[start] = 1
    scale = 1
    while True:
        yield v, scale
        nxt = [0] * size
        for i, vi in enumerate(v):
            if vi:
                for j, a in rows[i]:
                    nxt[j] += vi * a
        v, scale = nxt, scale * den


def tv_sequence(chain: Chain, start: int) -> Iterator[Fraction]:
    """Exact ``d_start(t) = ||P^t(start, .) - pi||_TV`` for t = 0, 1, ..."""
    sden, s = chain._stationary_ints
    for v, scale in distribution_powers(chain, start):
        total = sum(abs(vj * sden - scale * sj) for vj, sj in zip(v, s))
        yield Fraction(total, 2 * scale * sden)


@dataclass(frozen=True)
class MixingProfile:
    start_state: Hashable
    distances: tuple[Fraction, ...]
    horizon: int


def mixing_profile(chain: Chain, start: int, horizon: int) -> MixingProfile:
    out = []
    for t, d in enumerate(tv_sequence(chain, start)):
        out.append(d)
        if t >= horizon:
            break
    if chain.laziness >= Fraction(1, 2):
        assert all(a >= b for a, b in zip(out, out[1:])), "TV profile of a lazy chain must be non-increasing"
    return MixingProfile(chain.states[start], tuple(out), horizon)


def _require_aperiodic(chain: Chain) -> None:
    if chain.laziness == 0 and not chain.is_aperiodic():
        raise PeriodicChainError("chain is periodic (bipartite support); use a lazy walk")


def mixing_times(
    chain: Chain, start: int, epsilons: Sequence, max_t: int = DEFAULT_HORIZON
) -> dict[Fraction, int]:
    """First hitting of each TV threshold from a single start, in one pass."""
    _require_aperiodic(chain)
    targets = sorted({Fraction(e) for e in epsilons}, reverse=True)
    for e in targets:
        if not 0 < e < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {e}")
    out: dict[Fraction, int] = {}
    pending = list(targets)
    for t, d in enumerate(tv_sequence(chain, start)):
        while pending and d <= pending[0]:
            out[pending.pop(0)] = t
        if not pending:
            return out
        if t >= max_t:
            raise HorizonExceededError(f"TV distance still {float(d):.3g} after {max_t} steps")
    raise AssertionError("unreachable")


def mixing_time(chain: Chain, start: int | None = None, epsilon=Fraction(1, 4), max_t: int = DEFAULT_HORIZON) -> int:
    """Exact ``t_mix(epsilon)``.

    With ``start=None`` this is the worst case over starting states (a single
    start suffices when the chain is flagged transitive).
    """
    eps = Fraction(epsilon)
    if start is not None:
        return mixing_times(chain, start, [eps], max_t)[eps]
    starts = [0] if chain.transitive else range(len(chain))
    return max(mixing_times(chain, s, [eps], max_t)[eps] for s in starts)


def worst_case_mixing_times(chain: Chain, epsilons: Sequence, max_t: int = DEFAULT_HORIZON) -> dict[Fraction, int]:
    starts = [0] if chain.transitive else range(len(chain))
    best: dict[Fraction, int] = {}
    for s in starts:
        for e, t in mixing_times(chain, s, epsilons, max_t).items():
            best[e] = max(best.get(e, 0), t)
    return best


# -- spectra --------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: tuple[float, ...]  # distinct, descending
    multiplicities: tuple[int, ...]
    cluster_tolerance: float = DEFAULT_CLUSTER_TOL

    @property
    def dimension(self) -> int:
        return sum(self.multiplicities)

    @property
    def num_distinct(self) -> int:
        return len(self.eigenvalues)

    def nonleading(self) -> list[tuple[float, int]]:
        """Eigenvalues with one copy of the leading eigenvalue removed."""
        out = list(zip(self.eigenvalues, self.multiplicities))
        if not out:
            return out
        lead, m = out[0]
        return ([(lead, m - 1)] if m > 1 else []) + out[1:]

    def second_abs(self) -> float:
        rest = self.nonleading()
        if not rest:
            raise ChainError("a single-state chain has no relaxation time")
        return max(abs(v) for v, _ in rest)

    def second_abs_branch(self) -> tuple[float, int]:
        """Eigenvalue (with sign) realising the second largest modulus, and its multiplicity."""
        rest = self.nonleading()
        if not rest:
            raise ChainError("a single-state chain has no relaxation time")
        return max(rest, key=lambda vm: (abs(vm[0]), vm[0]))


def cluster_eigenvalues(values: Sequence[float], weights: Sequence[float] | None = None, tol: float = DEFAULT_CLUSTER_TOL):
    """Group descending values whose consecutive gaps are within ``tol``.

    Returns ``[(mean value, total weight), ...]``; weights default to 1.
    """
    order = sorted(range(len(values)), key=lambda i: -values[i])
    groups: list[list[int]] = []
    for i in order:
        if groups and values[groups[-1][-1]] - values[i] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    w = [1.0] * len(values) if weights is None else weights
    return [(float(np.mean([values[i] for i in g])), sum(w[i] for i in g)) for g in groups]


def symmetrized(chain: Chain) -> np.ndarray:
    p = chain.to_numpy()
    root = np.sqrt(np.array([float(x) for x in chain.stationary]))
    s = root[:, None] * p / root[None, :]
    return (s + s.T) / 2


def spectrum(chain: Chain, cluster_tolerance: float = DEFAULT_CLUSTER_TOL) -> Spectrum:
    try:
        values = np.linalg.eigvalsh(symmetrized(chain))
    except np.linalg.LinAlgError as exc:
        raise ChainError(f"eigensolver failed: {exc}") from exc
    groups = cluster_eigenvalues(list(values), tol=cluster_tolerance)
    spec = Spectrum(tuple(v for v, _ in groups), tuple(int(m) for _, m in groups), cluster_tolerance)
    if chain.is_connected() and abs(spec.eigenvalues[0] - 1) <= cluster_tolerance and spec.multiplicities[0] != 1:
        raise ChainError("leading eigenvalue of a connected chain must be simple")
    return spec


def relaxation_time(spec: Spectrum) -> float:
    return 1.0 / (1.0 - spec.second_abs())


def bipartite_test(spec: Spectrum, tol: float = DEFAULT_CLUSTER_TOL) -> bool:
    """Is the eigenvalue multiset symmetric about zero?"""
    pairs = list(zip(spec.eigenvalues, spec.multiplicities))
    for (a, ma), (b, mb) in zip(pairs, reversed(pairs)):
        if abs(a + b) > tol or ma != mb:
            return False
    return True


@dataclass(frozen=True)
class MixingBounds:
    epsilon: Fraction
    t_mix: int
    t_rel: float
    pi_min: Fraction
    lower: float
    upper: float

    @property
    def holds(self) -> bool:
        return self.lower <= self.t_mix <= self.upper


def mixing_bounds(epsilon, t_mix: int, t_rel: float, pi_min) -> MixingBounds:
    eps = Fraction(epsilon)
    lower = (t_rel - 1) * math.log(1 / (2 * eps))
    upper = t_rel * math.log(1 / (eps * Fraction(pi_min)))
    # float slack for the log evaluations only; t_mix itself is exact
    slack = 1e-9 * max(1.0, abs(upper))
    return MixingBounds(eps, t_mix, t_rel, Fraction(pi_min), lower - slack, upper + slack)


def verify_mixing_bounds(chain: Chain, epsilon=Fraction(1, 4), start: int | None = None, check: bool = True) -> MixingBounds:
    """``(t_rel - 1) log(1/2eps) <= t_mix(eps) <= t_rel log(1/(eps pi_min))``."""
    t_mix = mixing_time(chain, start, epsilon)
    report = mixing_bounds(epsilon, t_mix, relaxation_time(spectrum(chain)), min(chain.stationary))
    if check and not report.holds:
        raise MixingBoundsError(
            f"mixing bounds violated at eps={report.epsilon}: {report.lower:.6g} <= {t_mix} <= {report.upper:.6g} fails"
        )
    return report
