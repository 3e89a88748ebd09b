import pytest

_outcomes: dict = {}
_details: dict = {}


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the criterion of the running test."""
    n = request.node.get_closest_marker("acceptance").args[0]

    def add(text):
        _details.setdefault(n, []).append(text)

    return add


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    mark = next((m for m in getattr(report, "_acceptance", []) if m), None)
    if mark is None:
        return
    n, title = mark
    prev = _outcomes.get(n, (title, True))
    _outcomes[n] = (title, prev[1] and report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    rep._acceptance = [tuple(m.args)] if m else []


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_outcomes):
        title, ok = _outcomes[n]
        detail = "; ".join(_details.get(n, []))
        tr.write_line(f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else ""))
