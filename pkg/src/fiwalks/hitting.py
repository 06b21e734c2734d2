"""Expected hitting times and the large-set hitting time."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .chain import Chain, worst_case_mixing_times
from .linalg import SingularMatrixError, solve, solve_any

DEFAULT_HITTING_CAP = 15
DEFAULT_NODE_BUDGET = 2_000_000
SEARCH_RTOL = 1e-9


class HittingCapError(ValueError):
    pass


def expected_hitting_times(chain: Chain, target: Iterable[int]) -> list[Fraction]:
    """``E_x[tau_A]`` for every state ``x``: solve ``(I - P|_V) Q = 1`` on the complement."""
    a_set = set(target)
    if not a_set:
        raise ValueError("target set must be nonempty")
    rest = [i for i in range(len(chain)) if i not in a_set]
    pos = {s: r for r, s in enumerate(rest)}
    m = [[Fraction(0)] * len(rest) for _ in rest]
    for r, s in enumerate(rest):
        m[r][r] += 1
        for j, p in chain.rows[s].items():
            if j in pos:
                m[r][pos[j]] -= p
    try:
        q = solve(m, [Fraction(1)] * len(rest))
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"hitting system is singular; is the chain connected? ({exc})") from None
    out = [Fraction(0)] * len(chain)
    for s, val in zip(rest, q):
        out[s] = val
    return out


@dataclass(frozen=True)
class HittingReport:
    alpha: Fraction
    t_hit: Fraction
    argmax_set: frozenset[int]
    argmax_start: int
    ratios: tuple[Fraction, Fraction] | None = None


def _mask_members(mask: int, size: int) -> list[int]:
    return [i for i in range(size) if mask >> i & 1]


def large_set_hitting_time(
    chain: Chain, alpha, cap: int = DEFAULT_HITTING_CAP, node_budget: int | None = DEFAULT_NODE_BUDGET
) -> HittingReport:
    """``max E_x[tau_A]`` over starts ``x`` and sets with ``pi(A) >= alpha``.

    Chains with at most ``cap`` states are searched exhaustively.  Larger
    chains use :func:`_branch_and_bound`; pass ``node_budget=None`` to refuse
    them instead.  Either way the winner is re-solved in exact arithmetic.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha < Fraction(1, 2):
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    size = len(chain)
    if size <= cap:
        return _exhaustive(chain, alpha)
    if node_budget is None:
        raise HittingCapError(f"{size} states exceed the exhaustive-search cap {cap}")
    return _branch_and_bound(chain, alpha, node_budget)


def _exhaustive(chain: Chain, alpha: Fraction) -> HittingReport:
    size = len(chain)
    pi = chain.stationary
    best = None
    for mask in range(1, 1 << size):
        members = _mask_members(mask, size)
        if sum((pi[i] for i in members), Fraction(0)) < alpha:
            continue
        times = expected_hitting_times(chain, members)
        x = max(range(size), key=lambda i: times[i])
        if best is None or times[x] > best[0]:
            best = (times[x], frozenset(members), x)
    t_hit, a_set, start = best
    # independent recomputation by Gauss-Jordan on the full first-step system
    check = _first_step_solution(chain, a_set)[start]
    assert check == t_hit, "hitting time disagrees with independent solve"
    return HittingReport(alpha, t_hit, a_set, start)


def _branch_and_bound(chain: Chain, alpha: Fraction, node_budget: int) -> HittingReport:
    """Depth-first search over sets, heaviest states first, in floating point.

    Hitting times only shrink as the target grows, so a partial set ``C``
    that still needs mass can be discarded once every one-state extension
    ``C + {i}`` hits no slower than the incumbent.  The Green's function of
    the complement is downdated by rank one per added state.  Every set
    within ``SEARCH_RTOL`` of the float maximum is re-solved exactly.
    """
    size = len(chain)
    p = chain.to_numpy()
    den = 1
    for q in chain.stationary:
        den = den * q.denominator // gcd(den, q.denominator)
    mass = [int(q * den) for q in chain.stationary]
    need = alpha * den
    order = sorted(range(size), key=lambda i: (-mass[i], i))
    suffix = [0] * (size + 1)
    for j in range(size - 1, -1, -1):
        suffix[j] = suffix[j + 1] + mass[order[j]]

    best = 0.0
    near: list[tuple[float, tuple[int, ...]]] = []
    nodes = 0
    # each stack entry: next position in ``order``, Green's function, hitting vector, mass, members
    stack = []
    for first in reversed(range(size)):
        i = order[first]
        if mass[i] + suffix[first + 1] < need:
            continue
        stack.append((first, None, None, 0, ()))
    while stack:
        j, g, h, m, members = stack.pop()
        nodes += 1
        if nodes > node_budget:
            raise HittingCapError(f"branch-and-bound exceeded {node_budget} nodes on {size} states")
        if g is None:
            # seed: order[j] is the heaviest member
            i = order[j]
            rest = [k for k in range(size) if k != i]
            g = np.zeros((size, size))
            g[np.ix_(rest, rest)] = np.linalg.inv(np.eye(size - 1) - p[np.ix_(rest, rest)])
            h = g.sum(axis=1)
            m, members, j = mass[i], (i,), j + 1
        if m >= need:
            value = float(h.max())
            if value >= best * (1 - SEARCH_RTOL):
                best = max(best, value)
                near = [(v, s) for v, s in near if v >= best * (1 - SEARCH_RTOL)]
                near.append((value, members))
            continue
        if m + suffix[j] < need:
            continue
        cand = order[j:]
        grown = h[None, :] - (g[:, cand] * (h[cand] / g[cand, cand])[None, :]).T
        bounds = grown.max(axis=1)
        threshold = best * (1 - SEARCH_RTOL)
        if bounds.max() < threshold:
            continue
        i = order[j]
        stack.append((j + 1, g, h, m, members))
        if bounds[0] >= threshold:
            g2 = g - np.outer(g[:, i], g[i, :]) / g[i, i]
            g2[i, :] = 0
            g2[:, i] = 0
            stack.append((j + 1, g2, grown[0], m + mass[i], members + (i,)))

    exact = None
    for _, members in near:
        times = _first_step_solution(chain, frozenset(members))
        x = max(range(size), key=lambda k: times[k])
        if exact is None or times[x] > exact[0]:
            exact = (times[x], frozenset(members), x)
    t_hit, a_set, start = exact
    return HittingReport(alpha, t_hit, a_set, start)


def _first_step_solution(chain: Chain, target: frozenset[int]) -> list[Fraction]:
    size = len(chain)
    rows, rhs = [], []
    for i in range(size):
        row = [Fraction(0)] * size
        row[i] = Fraction(1)
        if i in target:
            rhs.append(Fraction(0))
        else:
            for j, p in chain.rows[i].items():
                row[j] -= p
            rhs.append(Fraction(1))
        rows.append(row)
    sol = solve_any(rows, rhs)
    if sol is None:
        raise SingularMatrixError("first-step system is inconsistent")
    return sol


@dataclass(frozen=True)
class PeresSousiReport:
    alpha: Fraction
    epsilon: Fraction
    t_mix: int
    t_hit: Fraction
    ratio: Fraction | None  # t_mix / t_hit; None when degenerate
    degenerate: bool = False


def peres_sousi_ratios(
    chain: Chain,
    alpha,
    epsilon=Fraction(1, 4),
    log: list | None = None,
    cap: int = DEFAULT_HITTING_CAP,
    t_mix: int | None = None,
) -> PeresSousiReport:
    """Observed ``t_mix(eps) / t_hit(alpha)``; appended to ``log`` when given.

    ``t_mix`` defaults to the chain's own worst case.  For an orbit walk pass
    the full-graph value (its root-start mixing time) instead.
    """
    alpha, eps = Fraction(alpha), Fraction(epsilon)
    if t_mix is None:
        t_mix = worst_case_mixing_times(chain, [eps])[eps]
    t_hit = large_set_hitting_time(chain, alpha, cap).t_hit
    if t_hit == 0:
        report = PeresSousiReport(alpha, eps, t_mix, t_hit, None, degenerate=True)
    else:
        report = PeresSousiReport(alpha, eps, t_mix, t_hit, Fraction(t_mix) / t_hit)
    if log is not None:
        log.append(report)
    return report


def ratio_window(ratios: Sequence[Fraction]) -> Fraction | None:
    """``max / min`` of positive ratios, or ``None`` if any ratio is zero or missing."""
    vals = [r for r in ratios if r is not None]
    if not vals or len(vals) != len(ratios) or min(vals) <= 0:
        return None
    return max(vals) / min(vals)
