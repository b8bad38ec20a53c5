import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_RESULTS: dict = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, shown in the terminal summary."""
    box = {}

    def note(cid, text):
        box["id"], box["text"] = cid, text

    yield note
    if "id" in box:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        _RESULTS[box["id"]] = f"{box['id']} {'PASS' if ok else 'FAIL'}  {box['text']}"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: int(k[1:])):
        terminalreporter.write_line(_RESULTS[key])
