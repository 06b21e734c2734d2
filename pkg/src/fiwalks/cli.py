"""Command-line front end: ``fiwalks families | analyze | quotient``.

Exit codes: 0 when every check passes, 1 for usage or configuration errors,
2 when a scientific assertion fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .catalog import BUILTINS, DEFAULT_INSTANCES, UnknownFamilyError, builtin_entry, builtin_family
from .chain import MixingBoundsError
from .family import FamilySpec, FamilySpecError, InstanceError, check_equivariance, parse_family_spec
from .hitting import DEFAULT_HITTING_CAP
from .quotient import LumpingError, build_orbit_walk
from .stabilization import (
    DEFAULT_FULL_CAP,
    DEFAULT_MAX_FIT_DEGREE,
    DEFAULT_PRODUCT_FLOOR,
    SweepAssertionError,
    SweepError,
    sweep,
    verdict,
)

EXIT_OK, EXIT_USAGE, EXIT_ASSERTION = 0, 1, 2
DEFAULT_EPS = "1/4,1/10,1/100"
DEFAULT_ALPHA = "1/8"
EQUIVARIANCE_TRIALS = 100


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class RunConfig:
    family: str
    params: tuple[int, ...]
    n_range: range
    epsilons: tuple[Fraction, ...]
    alphas: tuple[Fraction, ...]
    laziness: Fraction
    full_graph_states: int
    hitting_states: int
    max_fit_degree: int
    output: Path
    seed: int
    spec_file: bool = False

    def __post_init__(self):
        if min(self.full_graph_states, self.hitting_states, self.max_fit_degree) < 1:
            raise UsageError("caps must be positive")
        if any(not 0 < e < 1 for e in self.epsilons):
            raise UsageError("epsilons must lie in (0, 1)")
        if any(not 0 < a < Fraction(1, 2) for a in self.alphas):
            raise UsageError("alphas must lie in (0, 1/2)")
        if not 0 <= self.laziness < 1:
            raise UsageError("laziness must lie in [0, 1)")


def _fractions(text: str, what: str) -> tuple[Fraction, ...]:
    try:
        return tuple(Fraction(x.strip()) for x in text.split(",") if x.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse {what} list {text!r}") from None


def _int_list(text: str | None) -> tuple[int, ...]:
    if not text:
        return ()
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse integer list {text!r}") from None


def _n_range(text: str) -> range:
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"--n-range must look like LO:HI or LO:HI:STEP, got {text!r}") from None
    if len(nums) not in (2, 3) or (len(nums) == 3 and nums[2] < 1):
        raise UsageError(f"--n-range must look like LO:HI or LO:HI:STEP, got {text!r}")
    return range(nums[0], nums[1] + 1, nums[2] if len(nums) == 3 else 1)


def load_family(config: RunConfig) -> FamilySpec:
    if config.spec_file:
        try:
            return parse_family_spec(Path(config.family).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read spec file: {exc}") from None
    return builtin_family(config.family, config.params)


def _config(args: argparse.Namespace, n_range: range = range(0)) -> RunConfig:
    if bool(args.family) == bool(args.spec_file):
        raise UsageError("give exactly one of --family and --spec-file")
    return RunConfig(
        family=args.family or args.spec_file,
        params=_int_list(args.params),
        n_range=n_range,
        epsilons=_fractions(getattr(args, "eps", DEFAULT_EPS), "--eps"),
        alphas=_fractions(getattr(args, "alpha", DEFAULT_ALPHA), "--alpha"),
        laziness=_fractions(args.laziness, "--laziness")[0] if args.laziness else Fraction(0),
        full_graph_states=args.cap_states,
        hitting_states=args.cap_hitting,
        max_fit_degree=getattr(args, "max_fit_degree", DEFAULT_MAX_FIT_DEGREE),
        output=Path(args.out),
        seed=args.seed,
        spec_file=bool(args.spec_file),
    )


# -- families ------------------------------------------------------------------


def cmd_families(out=None) -> int:
    out = out or sys.stdout
    examples = {}
    for name, params in DEFAULT_INSTANCES:
        examples.setdefault(name, params)
    for name, entry in BUILTINS.items():
        params = examples.get(name, (entry.min_param,) * entry.arity)
        spec = builtin_family(name, params)
        shown = " ".join([name, *entry.param_names])
        at = ", ".join(f"{p}={v}" for p, v in zip(entry.param_names, params))
        n_min = f"n_min={spec.n_min}" + (f" at {at}" if at else "")
        print(f"{shown:<28} {n_min:<16} {entry.growth:<9} {spec.description}", file=out)
    return EXIT_OK


# -- analyze -------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, Fraction)):
        return str(x)
    return format(x, ".15g")


def _eps_name(e: Fraction) -> str:
    return str(e)


def csv_header(epsilons: Sequence[Fraction], alphas: Sequence[Fraction]) -> list[str]:
    return (
        ["n", "num_vertices", "quotient_states", "degree", "num_distinct_eigs", "lambda2_abs", "t_rel"]
        + [f"t_mix_eps_{_eps_name(e)}" for e in epsilons]
        + [f"t_hit_alpha_{_eps_name(a)}" for a in alphas]
        + ["ratio_trel_over_tmix", "bound_log4V"]
    )


def write_csv(path: Path, records, epsilons, alphas) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_header(epsilons, alphas))
        for r in records:
            t = r.t_mix[Fraction(1, 4)]
            writer.writerow(
                [r.n, r.num_vertices, r.quotient_states, _fmt(r.degree_weight), r.num_distinct_eigs,
                 _fmt(r.lambda2_abs), _fmt(r.t_rel)]
                + [r.t_mix[e] for e in epsilons]
                + [_fmt(r.t_hit.get(a)) for a in alphas]
                + [_fmt(r.t_rel / t if t else None), _fmt(math.log(4 * r.num_vertices))]
            )


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def cmd_analyze(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    spec = load_family(config)
    ns = list(config.n_range)
    if not ns:
        raise UsageError("empty --n-range")
    if ns[0] < spec.n_min:
        raise UsageError(f"n={ns[0]} is below n_min={spec.n_min} for {spec.name}")
    epsilons = sorted(set(config.epsilons) | {1 - e for e in config.epsilons} | {Fraction(1, 4)})
    alphas = sorted(set(config.alphas))
    entry = None if config.spec_file else builtin_entry(spec.name)
    floor = entry.product_floor if entry else DEFAULT_PRODUCT_FLOOR

    failures = [
        f"pair_orbit not equivariant for u={u}, v={v}, sigma={s}"
        for u, v, s in check_equivariance(spec, ns[0], random.Random(config.seed), EQUIVARIANCE_TRIALS)
    ]
    records = sweep(
        spec, ns, epsilons, alphas, config.laziness, config.full_graph_states, config.hitting_states,
    )
    doc = verdict(spec, records, floor, config.max_fit_degree)
    doc["failures"] = failures + doc["failures"]
    doc["config"] = {
        "family": spec.name,
        "params": list(config.params),
        "epsilons": [str(e) for e in epsilons],
        "alphas": [str(a) for a in alphas],
        "laziness": str(config.laziness),
        "seed": config.seed,
        "cap_states": config.full_graph_states,
        "cap_hitting": config.hitting_states,
        "max_fit_degree": config.max_fit_degree,
    }
    doc["full_graph_checked_n"] = [r.n for r in records if r.full_checked]

    config.output.mkdir(parents=True, exist_ok=True)
    write_csv(config.output / "sweep.csv", records, epsilons, alphas)
    for n in ns:
        _write_json(config.output / f"quotient_{n}.json", build_orbit_walk(spec, n, config.laziness).to_json())
    _write_json(config.output / "verdict.json", doc)

    print(
        f"{spec.name}: n={ns[0]}..{ns[-1]}, stable eigenvalue count {doc['stable_eig_count']}, "
        f"product condition failed {doc['product_condition_failed']}, cutoff flag {doc['cutoff_flag']}",
        file=out,
    )
    for f in doc["failures"]:
        print(f"FAIL {f}", file=out)
    return EXIT_ASSERTION if doc["failures"] else EXIT_OK


# -- quotient ------------------------------------------------------------------


def cmd_quotient(config: RunConfig, n: int, out=None) -> int:
    out = out or sys.stdout
    spec = load_family(config)
    if n < spec.n_min:
        raise UsageError(f"n={n} is below n_min={spec.n_min} for {spec.name}")
    q = build_orbit_walk(spec, n, config.laziness)
    config.output.mkdir(parents=True, exist_ok=True)
    _write_json(config.output / f"quotient_{n}.json", q.to_json())
    print(f"{spec.name} at n={n}: {q.num_vertices} vertices, {len(q)} orbit states", file=out)
    print(f"{'state':<24} {'class size':>12}  representative", file=out)
    for s, rep in zip(q.states, q.representatives):
        print(f"{s.label():<24} {s.class_size:>12}  {rep}", file=out)
    for row in q.base.dense():
        print("  ".join(f"{str(x):>10}" for x in row), file=out)
    return EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fiwalks", description="Random walks on transitive FI-graph families.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("families", help="list built-in families")

    common = _Parser(add_help=False)
    common.add_argument("--family", help="built-in family name")
    common.add_argument("--spec-file", help="JSON family specification")
    common.add_argument("--params", help="comma-separated integer parameters, e.g. 2")
    common.add_argument("--laziness", default="0", help="holding probability (rational)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap-states", type=int, default=DEFAULT_FULL_CAP, help="largest full graph to build")
    common.add_argument("--cap-hitting", type=int, default=DEFAULT_HITTING_CAP, help="largest chain searched exhaustively for t_hit; larger ones use branch and bound")

    an = sub.add_parser("analyze", parents=[common], help="sweep a family over n")
    an.add_argument("--n-range", required=True, help="LO:HI (inclusive) or LO:HI:STEP")
    an.add_argument("--eps", default=DEFAULT_EPS, help="comma-separated epsilons")
    an.add_argument("--alpha", default=DEFAULT_ALPHA, help="comma-separated alphas")
    an.add_argument("--max-fit-degree", type=int, default=DEFAULT_MAX_FIT_DEGREE)

    qu = sub.add_parser("quotient", parents=[common], help="export the orbit walk at one n")
    qu.add_argument("--n", type=int, required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "families":
            return cmd_families()
        if args.command == "analyze":
            return cmd_analyze(_config(args, _n_range(args.n_range)))
        return cmd_quotient(_config(args), args.n)
    except (UsageError, UnknownFamilyError, FamilySpecError, InstanceError, ValueError) as exc:
        print(f"fiwalks: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SweepAssertionError, SweepError, LumpingError, MixingBoundsError) as exc:
        print(f"fiwalks: assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
