from __future__ import annotations

from pathlib import Path

import pytest

from fabula.analysis import extract_frames, lift_to_fabula
from fabula.cli import fixture_text
from fabula.ground import Unsolvable
from fabula.justify import build_compiled_task
from fabula.micro import random_micro
from fabula.pddl import load_narrative
from fabula.search import astar

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
GOLDEN = HERE / "golden"


def load_fixture(name: str):
    return load_narrative(fixture_text(name))


@pytest.fixture(scope="session")
def aladdin():
    return load_fixture("aladdin")


@pytest.fixture(scope="session")
def aladdin_compiled(aladdin):
    d, p = aladdin
    return build_compiled_task(d, p)


@pytest.fixture(scope="session")
def aladdin_solution(aladdin, aladdin_compiled):
    d, p = aladdin
    ct = aladdin_compiled
    res = astar(ct.ground)
    assert res.solved
    fp = extract_frames(lift_to_fabula(ct.ground, res.plan, ct.metadata, d, p))
    return res, fp


def solvable_micro_tasks(count: int, toggling: bool = True, start: int = 0, limit: int = 5000):
    """(seed, domain, problem, compiled task, A* result) for the first
    ``count`` generated micro tasks that are solvable."""
    out = []
    seed = start
    while len(out) < count and seed < start + limit:
        micro = random_micro(seed, toggling=toggling)
        d, p = load_narrative(micro.text)
        try:
            ct = build_compiled_task(d, p)
        except Unsolvable:
            seed += 1
            continue
        res = astar(ct.ground)
        if res.solved:
            out.append((seed, d, p, ct, res))
        seed += 1
    return out


@pytest.fixture(scope="session")
def micro_tasks():
    return solvable_micro_tasks(120)


# ── acceptance report ────────────────────────────────────────────────────────
#
# Tests marked ``@pytest.mark.criterion(n, "summary")`` are collected into one
# PASS/FAIL line per acceptance criterion, printed at the end of the run.
# A test adds detail to its line via ``record_property("detail", ...)``.

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, summary): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    n, summary = mark.args
    entry = _CRITERIA.setdefault(n, {"summary": summary, "ok": True, "details": []})
    if rep.failed:
        entry["ok"] = False
    if rep.when == "call":
        entry["details"] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        detail = "; ".join(e["details"])
        line = f"criterion {n:2d}: {'PASS' if e['ok'] else 'FAIL'}  {e['summary']}"
        terminalreporter.write_line(line + (f" [{detail}]" if detail else ""))
