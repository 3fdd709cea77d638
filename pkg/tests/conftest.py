import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {}


@pytest.fixture
def criterion(request):
    """Record a named acceptance criterion; PASS only if the test body finishes."""
    record = {}

    def start(number, title):
        record.update(number=number, title=title, detail="")
        CRITERIA[number] = (title, "FAIL", "")

    def detail(text):
        record["detail"] = text
        CRITERIA[record["number"]] = (record["title"], "FAIL", text)

    start.detail = detail
    yield start
    if record and request.node.rep_call.passed:
        CRITERIA[record["number"]] = (record["title"], "PASS", record["detail"])


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, status, detail = CRITERIA[number]
        suffix = f" ({detail})" if detail else ""
        terminalreporter.write_line(f"criterion {number} {status}: {title}{suffix}")
