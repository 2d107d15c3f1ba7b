from pathlib import Path

import pytest

from robotraffic.log_model import AgentId, Request

DATA = Path(__file__).parent / "data"


@pytest.fixture
def fixture_log():
    return DATA / "fixture_access.log"


@pytest.fixture
def ua_db_file():
    return DATA / "ua_db.txt"


def make_requests(times_by_agent, mode="UA+IP"):
    """``times_by_agent`` maps an agent name to its request times; paths are ``/<name>/<i>.html``."""
    out = []
    for name, times in times_by_agent.items():
        agent = AgentId(f"{name}bot", f"10.0.0.{len(out) % 200 + 1}", mode)
        out.extend(Request(agent, float(t), f"/{name}/{i}.html") for i, t in enumerate(times))
    return out


# -- acceptance report: one PASS/FAIL line per criterion ----------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "details": []})
    if not report.passed:
        entry["passed"] = False
    if report.when == "call":
        entry["details"].extend(f"{k}={v}" for k, v in item.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        line = f"criterion {number}: {'PASS' if e['passed'] else 'FAIL'}  {e['title']}"
        if e["details"]:
            line += "  [" + ", ".join(e["details"]) + "]"
        terminalreporter.write_line(line)
