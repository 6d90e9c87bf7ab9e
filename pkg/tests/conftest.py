import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[int, list] = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion this test exercises")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _criteria[mark.args[0]].append((item.name, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        runs = _criteria[n]
        ok = all(passed for _, passed, _ in runs)
        failed = [name for name, passed, _ in runs if not passed]
        details = [d for _, _, d in runs if d]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({len(runs) - len(failed)}/{len(runs)} checks)"
        if details:
            line += " | " + " | ".join(details)
        if failed:
            line += " | failed: " + ", ".join(failed)
        tr.write_line(line)
