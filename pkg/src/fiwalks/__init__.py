"""Exact random walks on transitive FI-graph families.

Families are given in tuple normal form (``family``), turned into exact
reversible chains (``chain``), reduced to the orbit walk of a root vertex
(``quotient``), and swept over ``n`` (``stabilization``).
"""

from .catalog import BUILTINS, builtin_family
from .chain import Chain, build_simple_walk, mixing_time, spectrum, tv_distance
from .family import FamilySpec, PairPattern, instantiate_graph, make_family, pair_orbit, parse_family_spec
from .fitting import fit_polynomial, fit_rational
from .hitting import expected_hitting_times, large_set_hitting_time, peres_sousi_ratios
from .quotient import build_orbit_walk, verify_lumping
from .ratfunc import RationalFunction
from .stabilization import sweep, verdict

__all__ = [
    "BUILTINS",
    "Chain",
    "FamilySpec",
    "PairPattern",
    "RationalFunction",
    "build_orbit_walk",
    "build_simple_walk",
    "builtin_family",
    "expected_hitting_times",
    "fit_polynomial",
    "fit_rational",
    "instantiate_graph",
    "large_set_hitting_time",
    "make_family",
    "mixing_time",
    "pair_orbit",
    "parse_family_spec",
    "peres_sousi_ratios",
    "spectrum",
    "sweep",
    "tv_distance",
    "verdict",
    "verify_lumping",
]
