from __future__ import annotations

from collections import defaultdict
from fractions import Fraction

import numpy as np
import pytest

from fiwalks.chain import Chain, mixing_bounds, mixing_times, relaxation_time, spectrum

SANDWICH_EPS = (Fraction(1, 4), Fraction(1, 100))
FLOAT_MARGIN = 1e-9
FLOAT_HORIZON = 200_000


# -- sandwich check for every chain built anywhere in the suite -------------------


class ChainLedger:
    """Checks the relaxation/mixing sandwich on each chain as it is built.

    Only the verdicts are kept, so large full-graph chains are not retained.
    """

    def __init__(self):
        self.checked = 0
        self.skipped: list[str] = []
        self.failures: list[str] = []

    def record(self, chain: Chain) -> None:
        if len(chain) < 2 or not chain.is_connected() or (chain.laziness == 0 and not chain.is_aperiodic()):
            self.skipped.append(f"{len(chain)} states: periodic, disconnected or trivial")
            return
        t_rel = relaxation_time(spectrum(chain))
        pi_min = min(chain.stationary)
        # the bound concerns the worst start; one start suffices on transitive chains
        per_start = [_float_mixing_times(chain, s) for s in ([0] if chain.transitive else range(len(chain)))]
        for eps in SANDWICH_EPS:
            b = mixing_bounds(eps, max(t[eps] for t in per_start), t_rel, pi_min)
            if not b.holds:
                self.failures.append(
                    f"{len(chain)}-state chain, eps={eps}: {b.lower:.6g} <= {b.t_mix} <= {b.upper:.6g} fails"
                )
        self.checked += 1


def _float_mixing_times(chain: Chain, start: int) -> dict[Fraction, int]:
    """TV thresholds by float powering; ambiguous crossings are redone exactly."""
    p = chain.to_numpy()
    pi = np.array([float(x) for x in chain.stationary])
    v = np.zeros(len(chain))
    v[start] = 1.0
    out: dict[Fraction, int] = {}
    for t in range(FLOAT_HORIZON):
        d = 0.5 * np.abs(v - pi).sum()
        for eps in SANDWICH_EPS:
            if eps in out:
                continue
            if abs(d - float(eps)) <= FLOAT_MARGIN:
                return mixing_times(chain, start, SANDWICH_EPS)
            if d < float(eps):
                out[eps] = t
        if len(out) == len(SANDWICH_EPS):
            return out
        v = v @ p
    raise AssertionError("float mixing horizon exceeded")


LEDGER = ChainLedger()


def _install_ledger() -> None:
    original = Chain.from_rows.__func__

    def recording(cls, *args, **kwargs):
        chain = original(cls, *args, **kwargs)
        LEDGER.record(chain)
        return chain

    Chain.from_rows = classmethod(recording)


@pytest.fixture(scope="session")
def chain_ledger() -> ChainLedger:
    return LEDGER


# -- acceptance reporting -----------------------------------------------------------

_criteria: dict[int, str] = {}
_outcomes: dict[int, list[bool]] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "run_last: run after every other test")
    _install_ledger()


def pytest_collection_modifyitems(session, config, items):
    items.sort(key=lambda item: item.get_closest_marker("run_last") is not None)
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            _criteria[mark.args[0]] = mark.args[1]


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    mark = _item_marks.get(report.nodeid)
    if mark is not None:
        _outcomes[mark].append(report.outcome == "passed")


_item_marks: dict[str, int] = {}


def pytest_itemcollected(item):
    mark = item.get_closest_marker("criterion")
    if mark:
        _item_marks[item.nodeid] = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        results = _outcomes.get(number)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status:<7} {_criteria[number]}")
    terminalreporter.write_line(f"chains checked against the sandwich bound: {LEDGER.checked}")

