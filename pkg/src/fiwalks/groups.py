"""Small permutation groups acting on tuple positions.

Permutations are 0-based one-line tuples: ``p[i]`` is the image of ``i``.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Sequence

Perm = tuple[int, ...]


def identity(k: int) -> Perm:
    return tuple(range(k))


def compose(p: Perm, q: Perm) -> Perm:
    """``p after q``."""
    return tuple(p[q[i]] for i in range(len(q)))


def inverse(p: Perm) -> Perm:
    out = [0] * len(p)
    for i, pi in enumerate(p):
        out[pi] = i
    return tuple(out)


def is_permutation(p: Sequence[int], k: int) -> bool:
    return len(p) == k and sorted(p) == list(range(k))


def closure(generators: Iterable[Perm], k: int, limit: int = 5040) -> tuple[Perm, ...]:
    """All elements of the group generated by ``generators``, sorted."""
    gens = [tuple(g) for g in generators]
    seen = {identity(k)}
    queue = deque(seen)
    while queue:
        g = queue.popleft()
        for s in gens:
            h = compose(s, g)
            if h not in seen:
                seen.add(h)
                if len(seen) > limit:
                    raise ValueError(f"group exceeds {limit} elements")
                queue.append(h)
    return tuple(sorted(seen))


def act_on_tuple(h: Perm, u: Sequence) -> tuple:
    """Reorder positions: ``(u . h)[i] = u[h[i]]``."""
    return tuple(u[h[i]] for i in range(len(h)))


def canonical_tuple(u: Sequence, group: Sequence[Perm]) -> tuple:
    return min(act_on_tuple(h, u) for h in group)


def orbit(start, neighbours) -> set:
    """Breadth-first orbit of ``start`` under a move function returning images."""
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in neighbours(x):
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen
