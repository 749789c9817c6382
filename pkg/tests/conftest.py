from __future__ import annotations

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_results: dict[tuple[int, str], str] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None or report.when == "teardown":
        return
    if report.when == "call" or report.failed:
        key = int(m.group(1)), m.group(2).replace("_", " ")
        if _results.get(key) != "FAIL":  # a parametrized criterion passes only if every case does
            _results[key] = "FAIL" if report.failed else "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for (k, name), verdict in sorted(_results.items()):
        terminalreporter.write_line(f"{verdict}  criterion {k}: {name}")
