"""Built-in family library."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Sequence

from .family import FamilySpec, make_family
from .ratfunc import RationalFunction

ONE = RationalFunction.constant(1)


def _poly(*coeffs: int) -> RationalFunction:
    return RationalFunction.polynomial(coeffs)


def _full_symmetric(k: int) -> list[list[int]]:
    if k < 2:
        return []
    swap = [2, 1] + list(range(3, k + 1))
    cycle = list(range(2, k + 1)) + [1]
    return [swap, cycle]


def complete() -> FamilySpec:
    return make_family("complete", 1, [], [((), ONE)], n_min=3, description="single labels, every pair adjacent (K_n)")


def kneser(r: int) -> FamilySpec:
    return make_family(
        f"kneser-{r}", r, _full_symmetric(r), [((), ONE)],
        description="r-element subsets, disjointness edges (Kneser graph KG(n,r))",
    )


def johnson(r: int) -> FamilySpec:
    shared = tuple((i, i) for i in range(1, r))
    return make_family(
        f"johnson-{r}", r, _full_symmetric(r), [(shared, ONE)],
        description="r-element subsets, adjacent when they share r-1 elements (Johnson graph J(n,r))",
    )


def ordered_pair_weighted() -> FamilySpec:
    # per-neighbour weights; both orbits have n-2 neighbours, so the first
    # coordinate moves with probability 1/n and the second with (n-1)/n
    return make_family(
        "ordered-pair-weighted", 2, [],
        [(((2, 2),), ONE), (((1, 1),), _poly(-1, 1))],
        description="ordered pairs; replace the first entry w.p. 1/n, else the second, by an unused number",
    )


def triple_replace_one() -> FamilySpec:
    edges = [(((2, 2), (3, 3)), ONE), (((1, 1), (3, 3)), ONE), (((1, 1), (2, 2)), ONE)]
    return make_family(
        "triple-replace-one", 3, [], edges,
        description="ordered triples; replace a uniformly chosen entry by an unused number",
    )


def _permutation_patterns(k: int):
    for sigma in permutations(range(1, k + 1)):
        if list(sigma) != list(range(1, k + 1)):
            yield tuple((sigma[j], j + 1) for j in range(k))


def triple_permute_or_replace() -> FamilySpec:
    # each of the 5 reorderings carries weight n-3 and the n-3 replacements
    # weight 5: a step permutes or replaces with probability 1/2 each
    edges = [(p, _poly(-3, 1)) for p in _permutation_patterns(3)]
    edges.append((((1, 1), (2, 2)), _poly(5)))
    return make_family(
        "triple-permute-or-replace", 3, [], edges,
        description="ordered triples; w.p. 1/2 reorder the entries (non-trivially), else replace the last by an unused number",
    )


def shift_register(k: int) -> FamilySpec:
    left = tuple((i + 1, i) for i in range(1, k))
    right = tuple((i, i + 1) for i in range(1, k))
    return make_family(
        f"shift-register-{k}", k, [], [(left, ONE), (right, ONE)],
        description="k-tuples; shift left or right, dropping the end entry and appending an unused number",
    )


def triple_weighted() -> FamilySpec:
    # n-3 single replacements at weight n-4 against (n-3)(n-4) double
    # replacements at weight n-1: first entry moves w.p. 1/n
    return make_family(
        "triple-weighted", 3, [],
        [(((2, 2), (3, 3)), _poly(-4, 1)), (((1, 1),), _poly(-1, 1))],
        description="ordered triples; replace the first entry w.p. 1/n, else the second and third, by unused numbers",
    )


def triple_permute_weighted() -> FamilySpec:
    # reorderings share probability (n-1)/n, replacing the last entry 1/n
    edges = [(p, _poly(3, -4, 1)) for p in _permutation_patterns(3)]
    edges.append((((1, 1), (2, 2)), _poly(5)))
    return make_family(
        "triple-permute-weighted", 3, [], edges,
        description="ordered triples; reorder w.p. (n-1)/n, else replace the last entry by an unused number",
    )


@dataclass(frozen=True)
class Builtin:
    name: str
    arity: int
    param_names: tuple[str, ...]
    build: Callable[..., FamilySpec]
    growth: str  # "constant" or "linear" mixing in n
    worked_example: bool | tuple[int, ...]  # a worked tuple-walk example (for these params only, if a tuple)
    product_floor: float = 0.05
    min_param: int = 1


BUILTINS: dict[str, Builtin] = {
    b.name: b
    for b in [
        Builtin("complete", 0, (), complete, "constant", False),
        Builtin("kneser", 1, ("r",), kneser, "constant", (2,)),
        Builtin("johnson", 1, ("r",), johnson, "constant", False),
        Builtin("ordered-pair-weighted", 0, (), ordered_pair_weighted, "linear", True),
        Builtin("triple-replace-one", 0, (), triple_replace_one, "constant", True),
        Builtin("triple-permute-or-replace", 0, (), triple_permute_or_replace, "constant", True),
        Builtin("shift-register", 1, ("k",), shift_register, "constant", True, min_param=2),
        Builtin("triple-weighted", 0, (), triple_weighted, "linear", True),
        Builtin("triple-permute-weighted", 0, (), triple_permute_weighted, "linear", True),
    ]
}

# parameterisations exercised by the test suite and the verdict tables
DEFAULT_INSTANCES: list[tuple[str, tuple[int, ...]]] = [
    ("complete", ()),
    ("kneser", (2,)),
    ("kneser", (3,)),
    ("johnson", (2,)),
    ("johnson", (3,)),
    ("ordered-pair-weighted", ()),
    ("triple-replace-one", ()),
    ("triple-permute-or-replace", ()),
    ("shift-register", (2,)),
    ("shift-register", (3,)),
    ("triple-weighted", ()),
    ("triple-permute-weighted", ()),
]


class UnknownFamilyError(KeyError):
    pass


def builtin_family(name: str, params: Sequence[int] = ()) -> FamilySpec:
    try:
        entry = BUILTINS[name]
    except KeyError:
        raise UnknownFamilyError(f"unknown family {name!r}; known: {', '.join(BUILTINS)}") from None
    params = tuple(params)
    if len(params) != entry.arity:
        raise ValueError(f"{name} takes {entry.arity} parameter(s) {entry.param_names}, got {len(params)}")
    if any(p < entry.min_param for p in params):
        raise ValueError(f"{name}: parameters must be >= {entry.min_param}, got {params}")
    return entry.build(*params)


def is_worked_example(name: str, params: Sequence[int] = ()) -> bool:
    """Is this parameterisation one of the worked tuple-walk examples?"""
    flag = BUILTINS[name].worked_example
    return flag == tuple(params) if isinstance(flag, tuple) else bool(flag)


def builtin_entry(spec_name: str) -> Builtin | None:
    """Catalog entry for a built spec name such as ``kneser-2``."""
    if spec_name in BUILTINS:
        return BUILTINS[spec_name]
    base = spec_name.rsplit("-", 1)[0]
    return BUILTINS.get(base)
