import os
import shutil

import pytest

from noshow.tournaments import enumerate_tournaments

SLOW = os.environ.get("NOSHOW_SLOW") == "1"
CADICAL = "{python} -m noshow.satrun --solver cadical195 {input}"

slow = pytest.mark.skipif(not SLOW, reason="long reproduction; set NOSHOW_SLOW=1")


@pytest.fixture(scope="session")
def index3():
    return enumerate_tournaments(3)


@pytest.fixture(scope="session")
def index4():
    return enumerate_tournaments(4)


@pytest.fixture(scope="session")
def index11():
    return enumerate_tournaments(11)


@pytest.fixture
def workdir(tmp_path):
    yield tmp_path
    shutil.rmtree(tmp_path, ignore_errors=True)


# --- acceptance summary: one PASS/FAIL line per criterion ---------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and not (report.when == "setup" and not report.passed)):
        return
    number, text = mark.args
    status = "skipped" if report.skipped else ("passed" if report.passed else "failed")
    _criteria.setdefault(number, []).append((text, status))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        items = _criteria[number]
        failed = [t for t, s in items if s == "failed"]
        skipped = sorted({t for t, s in items if s == "skipped"})
        verdict = "FAIL" if failed else ("PASS" if not skipped else "INCOMPLETE")
        line = f"criterion {number}: {verdict}  [{sum(s == 'passed' for _, s in items)}/{len(items)} checks passed]"
        if failed:
            line += "  failed: " + "; ".join(sorted(set(failed)))
        if skipped:
            line += "  not run: " + "; ".join(skipped)
        terminalreporter.write_line(line)
