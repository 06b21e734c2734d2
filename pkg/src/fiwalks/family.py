"""FI-graph families in tuple normal form.

A family is described by a tuple length ``k``, a symmetry group ``H`` acting
on tuple positions, and a list of edge orbits.  At level ``n`` the vertices
are the ``H``-classes of injective ``k``-tuples over ``[n]``; two vertices are
adjacent when the equality pattern between their tuples (taken up to
``H x H``) is one of the listed edge orbits.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import permutations, product
from typing import Any, Iterable, Mapping, Sequence

from .groups import Perm, act_on_tuple, canonical_tuple, closure, identity, is_permutation
from .ratfunc import RationalFunction, falling

MAX_K = 7
DEFAULT_STATE_CAP = 200_000


class FamilySpecError(ValueError):
    """Base class for invalid family descriptions."""


class SchemaError(FamilySpecError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class SymmetryClosureError(FamilySpecError):
    pass


class TransposeClosureError(FamilySpecError):
    pass


class InstanceError(ValueError):
    """A family cannot be instantiated at the requested ``n``."""


class CapExceededError(InstanceError):
    pass


class DisconnectedError(InstanceError):
    def __init__(self, n: int, first, second):
        self.representatives = (first, second)
        super().__init__(f"instance at n={n} is disconnected: {first} and {second} lie in different components")


@dataclass(frozen=True, order=True)
class PairPattern:
    """Which coordinates of two tuples coincide (1-based ``(i, j)`` means ``u_i == v_j``)."""

    k_left: int
    k_right: int
    matches: tuple[tuple[int, int], ...]

    def __post_init__(self):
        ms = tuple(sorted((int(i), int(j)) for i, j in self.matches))
        object.__setattr__(self, "matches", ms)
        lefts = [i for i, _ in ms]
        rights = [j for _, j in ms]
        if len(set(lefts)) != len(lefts) or len(set(rights)) != len(rights):
            raise ValueError(f"matches {ms} are not a partial injection")
        if any(not (1 <= i <= self.k_left and 1 <= j <= self.k_right) for i, j in ms):
            raise ValueError(f"matches {ms} out of range for {self.k_left}x{self.k_right}")

    @classmethod
    def between(cls, u: Sequence, v: Sequence) -> "PairPattern":
        where = {x: j for j, x in enumerate(v, start=1)}
        return cls(len(u), len(v), tuple((i, where[x]) for i, x in enumerate(u, start=1) if x in where))

    @classmethod
    def identity(cls, k: int) -> "PairPattern":
        return cls(k, k, tuple((i, i) for i in range(1, k + 1)))

    def transpose(self) -> "PairPattern":
        return PairPattern(self.k_right, self.k_left, tuple((j, i) for i, j in self.matches))

    def relabel(self, left: Perm, right: Perm) -> "PairPattern":
        return PairPattern(
            self.k_left, self.k_right, tuple((left[i - 1] + 1, right[j - 1] + 1) for i, j in self.matches)
        )

    @property
    def size(self) -> int:
        return len(self.matches)

    def label(self) -> str:
        return "".join(f"({i},{j})" for i, j in self.matches) or "()"

    def to_json(self) -> list:
        return [list(m) for m in self.matches]


@dataclass(frozen=True)
class EdgeOrbit:
    pattern: PairPattern
    weight: RationalFunction = field(default_factory=lambda: RationalFunction.constant(1))


@dataclass(frozen=True, eq=False)
class FamilySpec:
    name: str
    k: int
    symmetry_generators: tuple[Perm, ...]  # 0-based one-line permutations
    edge_orbits: tuple[EdgeOrbit, ...]
    n_min: int
    description: str = ""

    @cached_property
    def group(self) -> tuple[Perm, ...]:
        return closure(self.symmetry_generators, self.k)

    @cached_property
    def _pattern_cache(self) -> dict:
        return {}

    def pattern_orbit(self, pattern: PairPattern) -> frozenset:
        """All raw patterns equivalent to ``pattern`` under ``H x H``."""
        return self._orbit_entry(pattern)[1]

    def canonical(self, pattern: PairPattern) -> PairPattern:
        return self._orbit_entry(pattern)[0]

    def _orbit_entry(self, pattern: PairPattern):
        cache = self._pattern_cache
        hit = cache.get(pattern)
        if hit is not None:
            return hit
        gens = self.symmetry_generators
        ident = identity(self.k)

        def moves(p: PairPattern):
            for g in gens:
                yield p.relabel(g, ident)
                yield p.relabel(ident, g)

        members = _bfs(pattern, moves)
        entry = (min(members, key=lambda p: p.matches), frozenset(members))
        for p in members:
            cache[p] = entry
        return entry

    @cached_property
    def edge_classes(self) -> tuple[tuple[PairPattern, RationalFunction], ...]:
        """Distinct canonical edge patterns with their weights, in listed order."""
        out: dict[PairPattern, RationalFunction] = {}
        for e in self.edge_orbits:
            out.setdefault(self.canonical(e.pattern), e.weight)
        return tuple(out.items())

    @cached_property
    def _edge_index(self) -> dict[PairPattern, int]:
        return {p: i for i, (p, _) in enumerate(self.edge_classes)}

    def edge_class_of(self, pattern: PairPattern) -> int | None:
        return self._edge_index.get(self.canonical(pattern))

    def weights_at(self, n: int) -> tuple[Fraction, ...]:
        out = []
        for p, w in self.edge_classes:
            value = w(n)
            if value < 0:
                raise InstanceError(f"edge orbit {p.label()} has negative weight {value} at n={n}")
            out.append(value)
        return tuple(out)

    def vertex_count(self, n: int) -> int:
        return falling(n, self.k) // len(self.group)

    def root(self) -> tuple[int, ...]:
        return tuple(range(1, self.k + 1))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "k": self.k,
            "symmetry_generators": [[x + 1 for x in g] for g in self.symmetry_generators],
            "edge_orbits": [{"matches": e.pattern.to_json(), "weight": e.weight.to_json()} for e in self.edge_orbits],
            "n_min": self.n_min,
        }


def _bfs(start, moves) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in moves(x):
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


# -- construction and validation ------------------------------------------------


def make_family(
    name: str,
    k: int,
    generators: Iterable[Sequence[int]],
    edges: Iterable[tuple[Iterable[tuple[int, int]], RationalFunction]],
    n_min: int | None = None,
    description: str = "",
) -> FamilySpec:
    """Build and validate a family; generators are 1-based one-line permutations."""
    gens = tuple(tuple(x - 1 for x in g) for g in generators)
    orbits = tuple(EdgeOrbit(PairPattern(k, k, tuple(m)), w) for m, w in edges)
    spec = FamilySpec(name, k, gens, orbits, 2 * k + 1 if n_min is None else n_min, description)
    validate(spec)
    return spec


def validate(spec: FamilySpec) -> None:
    k = spec.k
    if not 1 <= k <= MAX_K:
        raise SchemaError("k", f"must be an integer in [1, {MAX_K}], got {k}")
    for g in spec.symmetry_generators:
        if not is_permutation(g, k):
            raise SchemaError("symmetry_generators", f"{[x + 1 for x in g]} is not a permutation of [{k}]")
    if not spec.edge_orbits:
        raise SchemaError("edge_orbits", "at least one edge orbit is required")
    if spec.n_min < k:
        raise SchemaError("n_min", f"must be at least k={k}")

    ident = spec.canonical(PairPattern.identity(k))
    for idx, e in enumerate(spec.edge_orbits):
        if e.pattern.k_left != k or e.pattern.k_right != k:
            raise SchemaError(f"edge_orbits[{idx}]", "pattern arity differs from k")
        if spec.canonical(e.pattern) == ident:
            raise SchemaError(f"edge_orbits[{idx}].matches", "pattern relates a vertex to itself (self-loop)")
        if e.weight(spec.n_min) < 0:
            raise SchemaError(f"edge_orbits[{idx}].weight", f"negative at n_min={spec.n_min}")

    by_class: dict[PairPattern, tuple[int, EdgeOrbit]] = {}
    for idx, e in enumerate(spec.edge_orbits):
        c = spec.canonical(e.pattern)
        if c in by_class and by_class[c][1].weight != e.weight:
            j, other = by_class[c]
            h1, h2 = _find_relabelling(spec, other.pattern, e.pattern)
            raise SymmetryClosureError(
                f"edge orbit {idx} {e.pattern.label()} is the image of edge orbit {j} {other.pattern.label()} "
                f"under ({[x + 1 for x in h1]}, {[x + 1 for x in h2]}) but has weight {e.weight} != {other.weight}"
            )
        by_class.setdefault(c, (idx, e))

    for idx, e in enumerate(spec.edge_orbits):
        t = spec.canonical(e.pattern.transpose())
        if t not in by_class:
            raise TransposeClosureError(
                f"edge orbit {idx} {e.pattern.label()}: transposed pattern {e.pattern.transpose().label()} is not listed"
            )
        if by_class[t][1].weight != e.weight:
            raise TransposeClosureError(
                f"edge orbit {idx} {e.pattern.label()}: transpose has weight {by_class[t][1].weight} != {e.weight}"
            )


def _find_relabelling(spec: FamilySpec, src: PairPattern, dst: PairPattern) -> tuple[Perm, Perm]:
    for h1, h2 in product(spec.group, repeat=2):
        if src.relabel(h1, h2) == dst:
            return h1, h2
    raise AssertionError("patterns in one orbit must be related by a group element")


# -- document parsing -----------------------------------------------------------

_TOP_LEVEL = {"name", "k", "symmetry_generators", "edge_orbits", "n_min", "description"}


def _int_list(value, where: str) -> list[int]:
    if not isinstance(value, list) or not value or not all(isinstance(c, int) and not isinstance(c, bool) for c in value):
        raise SchemaError(where, "expected a nonempty list of integers")
    return value


def parse_family_spec(document: str | Mapping[str, Any]) -> FamilySpec:
    """Parse a JSON family document (or an already-decoded mapping)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError("document", f"not valid JSON ({exc.msg})") from None
    if not isinstance(document, Mapping):
        raise SchemaError("document", "expected a JSON object")
    if "vertex_orbits" in document:
        raise SchemaError("vertex_orbits", "multi-orbit (non-transitive) families are not supported")
    unknown = set(document) - _TOP_LEVEL
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown field")
    for key in ("name", "k", "edge_orbits"):
        if key not in document:
            raise SchemaError(key, "missing required field")

    name = document["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "expected a nonempty string")
    k = document["k"]
    if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= MAX_K:
        raise SchemaError("k", f"expected an integer in [1, {MAX_K}]")

    gens = document.get("symmetry_generators", [])
    if not isinstance(gens, list):
        raise SchemaError("symmetry_generators", "expected a list of permutations")
    for i, g in enumerate(gens):
        if not isinstance(g, list) or sorted(g) != list(range(1, k + 1)):
            raise SchemaError(f"symmetry_generators[{i}]", f"expected a one-line permutation of 1..{k}")

    raw_edges = document["edge_orbits"]
    if not isinstance(raw_edges, list) or not raw_edges:
        raise SchemaError("edge_orbits", "expected a nonempty list")
    edges = []
    for i, e in enumerate(raw_edges):
        where = f"edge_orbits[{i}]"
        if not isinstance(e, Mapping) or "matches" not in e:
            raise SchemaError(where, "expected an object with 'matches'")
        matches = e["matches"]
        if not isinstance(matches, list) or not all(
            isinstance(m, list) and len(m) == 2 and all(isinstance(x, int) for x in m) for m in matches
        ):
            raise SchemaError(f"{where}.matches", "expected a list of [i, j] integer pairs")
        weight = e.get("weight", {"num": [1], "den": [1]})
        if not isinstance(weight, Mapping) or "num" not in weight:
            raise SchemaError(f"{where}.weight", "expected {num: [...], den: [...]}")
        num = _int_list(weight["num"], f"{where}.weight.num")
        den = _int_list(weight.get("den", [1]), f"{where}.weight.den")
        if not any(den):
            raise SchemaError(f"{where}.weight.den", "denominator is identically zero")
        try:
            pattern = [tuple(m) for m in matches]
            PairPattern(k, k, tuple(pattern))
        except ValueError as exc:
            raise SchemaError(f"{where}.matches", str(exc)) from None
        edges.append((pattern, RationalFunction(num, den)))

    n_min = document.get("n_min")
    if n_min is not None and (not isinstance(n_min, int) or isinstance(n_min, bool) or n_min < 1):
        raise SchemaError("n_min", "expected a positive integer")
    return make_family(name, k, gens, edges, n_min, document.get("description", ""))


# -- instances ------------------------------------------------------------------


def canonical_vertex(spec: FamilySpec, u: Sequence[int]) -> tuple[int, ...]:
    return canonical_tuple(tuple(u), spec.group)


def enumerate_vertices(spec: FamilySpec, n: int, cap: int = DEFAULT_STATE_CAP) -> list[tuple[int, ...]]:
    """Canonical representatives of every vertex at level ``n``, in lexicographic order."""
    if n < spec.n_min:
        raise InstanceError(f"n={n} is below n_min={spec.n_min} for family {spec.name}")
    count = spec.vertex_count(n)
    if count > cap:
        raise CapExceededError(f"{spec.name} at n={n} has {count} vertices (cap {cap})")
    group = spec.group
    return [u for u in permutations(range(1, n + 1), spec.k) if u == canonical_tuple(u, group)]


def pair_orbit(spec: FamilySpec, u: Sequence[int], v: Sequence[int]) -> PairPattern:
    """Canonical equality pattern of the pair ``(u, v)``; equal iff same ``S_n``-orbit."""
    if len(u) != spec.k or len(v) != spec.k:
        raise ValueError(f"tuples must have length {spec.k}, got {len(u)} and {len(v)}")
    return spec.canonical(PairPattern.between(u, v))


def neighbour_tuples(spec: FamilySpec, u: Sequence[int], pattern: PairPattern, fill: Sequence[int]):
    """Tuples ``z`` whose raw pattern against ``u`` lies in the orbit of ``pattern``.

    Unmatched coordinates of ``z`` take distinct values from ``fill``, which
    must avoid the values of ``u``.
    """
    k = spec.k
    for raw in spec.pattern_orbit(pattern):
        z: list[Any] = [None] * k
        for i, j in raw.matches:
            z[j - 1] = u[i - 1]
        free = [j for j in range(k) if z[j] is None]
        for values in permutations(fill, len(free)):
            for j, x in zip(free, values):
                z[j] = x
            yield tuple(z)


@dataclass(frozen=True, eq=False)
class GraphInstance:
    spec: FamilySpec
    n: int
    vertices: tuple[tuple[int, ...], ...]
    neighbours: tuple[dict[int, int], ...]  # vertex index -> {neighbour index: edge class}
    weights: tuple[Fraction, ...]  # per edge class, evaluated at n
    degree_weight: Fraction

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {v: i for i, v in enumerate(self.vertices)}

    def __len__(self):
        return len(self.vertices)

    def edge_orbit(self, i: int, j: int) -> int | None:
        return self.neighbours[i].get(j)

    def weight(self, i: int, j: int) -> Fraction:
        c = self.neighbours[i].get(j)
        return Fraction(0) if c is None else self.weights[c]

    @property
    def degree_weights(self) -> tuple[Fraction, ...]:
        return tuple(sum((self.weights[c] for c in nb.values()), Fraction(0)) for nb in self.neighbours)


def instantiate_graph(spec: FamilySpec, n: int, cap: int = DEFAULT_STATE_CAP) -> GraphInstance:
    vertices = enumerate_vertices(spec, n, cap)
    # every ordering of every vertex, so neighbours need no canonicalisation
    index = {act_on_tuple(h, v): i for i, v in enumerate(vertices) for h in spec.group}
    weights = spec.weights_at(n)
    universe = range(1, n + 1)
    neighbours = []
    for u in vertices:
        fill = [x for x in universe if x not in u]
        nb: dict[int, int] = {}
        for c, (pattern, _) in enumerate(spec.edge_classes):
            if weights[c] == 0:
                continue
            for z in neighbour_tuples(spec, u, pattern, fill):
                nb[index[z]] = c
        neighbours.append(nb)

    degree = [sum(weights[c] * m for c, m in Counter(nb.values()).items()) for nb in neighbours]
    if len(set(degree)) != 1:
        raise InstanceError(f"{spec.name} at n={n} is not regular: degree weights {sorted(set(degree))}")
    for i, nb in enumerate(neighbours):
        for j, c in nb.items():
            back = neighbours[j].get(i)
            if back is None or weights[back] != weights[c]:
                raise InstanceError(f"adjacency not symmetric between {vertices[i]} and {vertices[j]}")

    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in neighbours[i]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    if len(seen) != len(vertices):
        other = next(i for i in range(len(vertices)) if i not in seen)
        raise DisconnectedError(n, vertices[0], vertices[other])

    return GraphInstance(spec, n, tuple(vertices), tuple(neighbours), weights, degree[0])


def check_equivariance(spec: FamilySpec, n: int, rng, trials: int = 100) -> list[tuple]:
    """Random injections ``[n] -> [n']`` (``n' >= n``) and reorderings in ``H``.

    Returns the ``(u, v, image)`` triples where ``pair_orbit`` is not invariant.
    """
    failures = []
    labels = list(range(1, n + 1))
    group = spec.group
    for _ in range(trials):
        u = tuple(rng.sample(labels, spec.k))
        v = tuple(rng.sample(labels, spec.k))
        image = rng.sample(range(1, rng.randint(n, 2 * n) + 1), n)
        sigma = dict(zip(labels, image))
        h, g = rng.choice(group), rng.choice(group)
        base = pair_orbit(spec, u, v)
        moved = pair_orbit(spec, tuple(sigma[x] for x in u), tuple(sigma[x] for x in v))
        reordered = pair_orbit(spec, act_on_tuple(h, u), act_on_tuple(g, v))
        if moved != base or reordered != base:
            failures.append((u, v, tuple(image)))
    return failures
