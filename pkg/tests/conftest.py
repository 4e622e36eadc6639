import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> (title, [(test name, outcome, measurements)])
_CRITERIA: dict[int, tuple[str, list]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        number, title = marker.args
        _, rows = _CRITERIA.setdefault(number, (title, []))
        rows.append((item.name, report.outcome, dict(report.user_properties)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, rows = _CRITERIA[number]
        ok = all(outcome == "passed" for _, outcome, _ in rows)
        tr.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
        for name, outcome, measured in rows:
            detail = ", ".join(f"{k}={v}" for k, v in measured.items())
            tr.write_line(f"    {outcome:7s} {name}" + (f"  [{detail}]" if detail else ""))
