import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

_outcomes: dict[str, list[tuple[str, bool, str]]] = {}
_details: dict[str, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): acceptance criterion; reported in the summary")


@pytest.fixture
def report(request):
    """Attach measured figures to the acceptance summary line of this test."""
    lines = _details.setdefault(request.node.nodeid, [])
    return lines.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        name = marker.args[0]
        _outcomes.setdefault(name, []).append((item.nodeid, rep.passed, "; ".join(_details.get(item.nodeid, []))))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, runs in _outcomes.items():
        ok = all(passed for _, passed, _ in runs)
        n_ok = sum(passed for _, passed, _ in runs)
        figures = "; ".join(d for _, _, d in runs if d)
        count = f" ({n_ok}/{len(runs)} cases)" if len(runs) > 1 else ""
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {name}{count}" + (f"  [{figures}]" if figures else ""))
        if not ok and len(runs) > 1:
            for nodeid, passed, detail in runs:
                if not passed:
                    tr.write_line(f"        failed: {nodeid.split('::')[-1]}" + (f"  {detail}" if detail else ""))
