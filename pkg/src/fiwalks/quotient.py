"""Orbit walks: the walk seen from a fixed root vertex, up to its stabiliser.

States are canonical equality patterns ``[y, x]`` between a vertex ``y`` and
the root ``x = (1, ..., k)``.  Transitions are computed from one
representative per state by enumerating its neighbours symbolically: values
outside the root and the representative are interchangeable, so they are
counted with falling factorials instead of being listed.  Nothing here
materialises the full graph except the explicit verification routines.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Sequence

import numpy as np

from .chain import (
    DEFAULT_CLUSTER_TOL,
    Chain,
    ChainError,
    Spectrum,
    build_simple_walk,
    cluster_eigenvalues,
    distribution_powers,
    symmetrized,
)
from .family import DEFAULT_STATE_CAP, FamilySpec, InstanceError, PairPattern, instantiate_graph, pair_orbit
from .ratfunc import falling

FRESH = object()


class LumpingError(AssertionError):
    pass


@dataclass(frozen=True, order=True)
class OrbitState:
    pattern: PairPattern
    class_size: int

    def label(self) -> str:
        return self.pattern.label()


@dataclass(frozen=True, eq=False)
class QuotientChain:
    base: Chain
    n: int
    spec: FamilySpec
    representatives: tuple[tuple[int, ...], ...]
    num_vertices: int
    degree_weight: Fraction

    @property
    def root(self) -> OrbitState:
        return self.base.states[0]

    @property
    def states(self) -> tuple[OrbitState, ...]:
        return self.base.states

    def __len__(self):
        return len(self.base)

    def state_index(self, pattern: PairPattern) -> int:
        for i, s in enumerate(self.base.states):
            if s.pattern == pattern:
                return i
        raise KeyError(pattern)

    def to_json(self) -> dict:
        return {
            "family": self.spec.name,
            "n": self.n,
            "laziness": str(self.base.laziness),
            "num_vertices": self.num_vertices,
            "states": [
                {"pattern": s.pattern.to_json(), "label": s.label(), "class_size": s.class_size,
                 "representative": list(rep)}
                for s, rep in zip(self.base.states, self.representatives)
            ],
            "transition": [[str(x) for x in row] for row in self.base.dense()],
            "stationary": [str(x) for x in self.base.stationary],
        }


def _state_order(p: PairPattern):
    return (-p.size, p.matches)


def abstract_patterns(spec: FamilySpec) -> list[PairPattern]:
    """Canonical partial injections ``[k] -> [k]`` up to ``H x H``, root pattern first."""
    k = spec.k
    seen = set()
    for m in range(k + 1):
        for lefts in combinations(range(1, k + 1), m):
            for rights in permutations(range(1, k + 1), m):
                seen.add(spec.canonical(PairPattern(k, k, tuple(zip(lefts, rights)))))
    return sorted(seen, key=_state_order)


def realizable_patterns(spec: FamilySpec, n: int) -> list[PairPattern]:
    return [p for p in abstract_patterns(spec) if n >= 2 * spec.k - p.size]


def class_size(spec: FamilySpec, pattern: PairPattern, n: int) -> int:
    """Number of vertices ``y`` with ``pair_orbit(y, root) == pattern``."""
    k = spec.k
    tuples = len(spec.pattern_orbit(pattern)) * falling(n - k, k - pattern.size)
    count, rem = divmod(tuples, len(spec.group))
    assert rem == 0, "tuple counts must be a union of whole H-orbits"
    return count


def root_vertex(spec: FamilySpec, n: int) -> tuple[int, ...]:
    if n < spec.n_min:
        raise InstanceError(f"n={n} is below n_min={spec.n_min} for family {spec.name}")
    return spec.root()


def representative(spec: FamilySpec, pattern: PairPattern) -> tuple[int, ...]:
    """Lexicographically least vertex realising ``pattern`` against the root."""
    k = spec.k
    best = None
    for raw in spec.pattern_orbit(pattern):
        y = [0] * k
        for i, j in raw.matches:
            y[i - 1] = j
        fresh = k + 1
        for i in range(k):
            if y[i] == 0:
                y[i] = fresh
                fresh += 1
        cand = tuple(y)
        if best is None or cand < best:
            best = cand
    return best


def _neighbour_types(spec: FamilySpec, y: tuple[int, ...], pattern: PairPattern, n: int):
    """Yield ``(z, multiplicity)`` where fresh coordinates of ``z`` are ``FRESH``.

    ``multiplicity`` counts the explicit tuples the symbolic ``z`` stands for.
    """
    k = spec.k
    root_vals = set(range(1, k + 1))
    outside = sorted(root_vals - set(y))
    n_fresh = n - len(root_vals | set(y))
    options = outside + [FRESH]
    for raw in spec.pattern_orbit(pattern):
        z = [None] * k
        for i, j in raw.matches:
            z[j - 1] = y[i - 1]
        free = [j for j in range(k) if z[j] is None]
        for choice in product(options, repeat=len(free)):
            explicit = [c for c in choice if c is not FRESH]
            if len(set(explicit)) != len(explicit):
                continue
            mult = falling(n_fresh, len(free) - len(explicit))
            if mult == 0:
                continue
            for j, c in zip(free, choice):
                z[j] = c
            yield tuple(z), mult


def _pattern_against_root(z: Sequence, k: int) -> PairPattern:
    return PairPattern(k, k, tuple((j + 1, v) for j, v in enumerate(z) if v is not FRESH and 1 <= v <= k))


def build_orbit_walk(spec: FamilySpec, n: int, laziness=0) -> QuotientChain:
    lazy = Fraction(laziness)
    if not 0 <= lazy < 1:
        raise ChainError(f"laziness must lie in [0, 1), got {lazy}")
    root_vertex(spec, n)
    k = spec.k
    h = len(spec.group)
    patterns = realizable_patterns(spec, n)
    index = {p: i for i, p in enumerate(patterns)}
    weights = spec.weights_at(n)

    degree_weight = Fraction(0)
    for (p, _), w in zip(spec.edge_classes, weights):
        degree_weight += w * Fraction(len(spec.pattern_orbit(p)) * falling(n - k, k - p.size), h)
    if degree_weight == 0:
        raise InstanceError(f"{spec.name} has no edges at n={n}")

    reps = [representative(spec, p) for p in patterns]
    rows = []
    for s, y in enumerate(reps):
        acc: dict[int, Fraction] = {}
        for (p, _), w in zip(spec.edge_classes, weights):
            if w == 0:
                continue
            for z, mult in _neighbour_types(spec, y, p, n):
                target = index[spec.canonical(_pattern_against_root(z, k))]
                acc[target] = acc.get(target, Fraction(0)) + w * mult
        scale = (1 - lazy) / (h * degree_weight)
        row = {t: v * scale for t, v in acc.items()}
        if lazy:
            row[s] = row.get(s, Fraction(0)) + lazy
        total = sum(row.values(), Fraction(0))
        if total != 1:
            raise LumpingError(f"orbit-walk row {patterns[s].label()} sums to {total} (canonicalisation bug)")
        rows.append(row)

    sizes = [class_size(spec, p, n) for p in patterns]
    num_vertices = spec.vertex_count(n)
    if sum(sizes) != num_vertices:
        raise LumpingError("class sizes do not partition the vertex set")
    states = [OrbitState(p, c) for p, c in zip(patterns, sizes)]
    stationary = [Fraction(c, num_vertices) for c in sizes]
    base = Chain.from_rows(states, rows, stationary, lazy, transitive=False)
    return QuotientChain(base, n, spec, tuple(reps), num_vertices, degree_weight)


# -- verification against the full graph ---------------------------------------


@dataclass(frozen=True)
class LumpingReport:
    n: int
    t_max: int
    max_discrepancy: Fraction
    class_sizes_match: bool

    @property
    def ok(self) -> bool:
        return self.max_discrepancy == 0 and self.class_sizes_match


def verify_lumping(
    spec: FamilySpec, n: int, t_max: int, laziness=0, cap: int = DEFAULT_STATE_CAP, check: bool = True
) -> LumpingReport:
    """Compare ``(P^x)^t(root, s)`` with ``|s| * P^t(x, y_s)`` exactly for t <= t_max."""
    instance = instantiate_graph(spec, n, cap)
    full = build_simple_walk(instance, laziness)
    q = build_orbit_walk(spec, n, laziness)
    x = instance.index[spec.root()]
    rep_idx = [instance.index[y] for y in q.representatives]

    counts: dict[PairPattern, int] = {}
    for v in instance.vertices:
        p = pair_orbit(spec, v, spec.root())
        counts[p] = counts.get(p, 0) + 1
    sizes_ok = counts == {s.pattern: s.class_size for s in q.states}

    worst = Fraction(0)
    full_iter = distribution_powers(full, x)
    quot_iter = distribution_powers(q.base, 0)
    for _t in range(t_max + 1):
        fv, fs = next(full_iter)
        qv, qs = next(quot_iter)
        for s, state in enumerate(q.states):
            diff = abs(Fraction(qv[s], qs) - state.class_size * Fraction(fv[rep_idx[s]], fs))
            worst = max(worst, diff)
    report = LumpingReport(n, t_max, worst, sizes_ok)
    if check and not report.ok:
        raise LumpingError(
            f"lumping identity fails for {spec.name} at n={n}: discrepancy {worst}, class sizes ok={sizes_ok}"
        )
    return report


@dataclass(frozen=True)
class StabilityReport:
    n_lo: int
    n_hi: int
    stable: bool
    states: tuple[PairPattern, ...]
    first_disagreement: int | None = None

    @property
    def num_states(self) -> int:
        return len(self.states)


def verify_state_stability(spec: FamilySpec, n_lo: int, n_hi: int) -> StabilityReport:
    if not n_hi > n_lo >= spec.n_min:
        raise ValueError(f"need n_hi > n_lo >= n_min={spec.n_min}, got {n_lo}..{n_hi}")
    ref = tuple(realizable_patterns(spec, n_lo))
    for n in range(n_lo + 1, n_hi + 1):
        if tuple(realizable_patterns(spec, n)) != ref:
            return StabilityReport(n_lo, n_hi, False, ref, n)
    return StabilityReport(n_lo, n_hi, True, ref)


@dataclass(frozen=True)
class LimitingStationaryReport:
    states: tuple[PairPattern, ...]
    probes: dict[int, tuple[Fraction, ...]]
    limit: tuple[int, ...]
    disjoint_mass: dict[int, Fraction]
    monotone: bool
    constant: Fraction  # least C with mass >= 1 - C/n at every probe


def limiting_stationary(spec: FamilySpec, n_probe: Sequence[int]) -> LimitingStationaryReport:
    probes = sorted(n_probe)
    states = tuple(realizable_patterns(spec, probes[0]))
    empty = PairPattern(spec.k, spec.k, ())
    table, mass = {}, {}
    for n in probes:
        if tuple(realizable_patterns(spec, n)) != states:
            raise ValueError(f"orbit states change between n={probes[0]} and n={n}")
        total = spec.vertex_count(n)
        row = tuple(Fraction(class_size(spec, p, n), total) for p in states)
        table[n] = row
        mass[n] = row[states.index(empty)]
    seq = [mass[n] for n in probes]
    monotone = all(a < b for a, b in zip(seq, seq[1:]))
    constant = max(n * (1 - mass[n]) for n in probes)
    limit = tuple(int(p == empty) for p in states)
    return LimitingStationaryReport(states, table, limit, mass, monotone, constant)


def full_spectrum_from_quotient(q: QuotientChain, cluster_tolerance: float = DEFAULT_CLUSTER_TOL) -> Spectrum:
    """Spectrum of the full walk, with multiplicities, from the orbit walk alone.

    Every eigenvalue of the full walk occurs in the orbit walk, and by
    transitivity ``tr P^t = |V| P^t(x, x) = |V| (P^x)^t(root, root)``; so the
    multiplicity of a full eigenvalue is ``|V|`` times the squared root
    component of the orthonormal eigenvectors of the symmetrised orbit walk.
    """
    values, vectors = np.linalg.eigh(symmetrized(q.base))
    weights = q.num_vertices * vectors[0, :] ** 2
    groups = cluster_eigenvalues(list(values), list(weights), cluster_tolerance)
    mults = []
    for value, w in groups:
        m = round(w)
        if m < 1 or abs(w - m) > 1e-6 * max(1.0, w):
            raise ChainError(f"eigenvalue {value:.12g} has non-integral full multiplicity {w:.9g}")
        mults.append(int(m))
    if sum(mults) != q.num_vertices:
        raise ChainError(f"multiplicities sum to {sum(mults)}, expected {q.num_vertices}")
    return Spectrum(tuple(v for v, _ in groups), tuple(mults), cluster_tolerance)
