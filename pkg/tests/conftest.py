import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest
from hypothesis import strategies as st

from waste_radar.snapshot import IssueKind, IssueRecord, Priority

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
T0 = datetime(2023, 1, 1, tzinfo=timezone.utc)


def at(days: float = 0, seconds: int = 0) -> datetime:
    return T0 + timedelta(days=days, seconds=seconds)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@st.composite
def issue_lists(draw, max_size=60, grid_hours=12):
    """Issues on a coarse time grid so equal timestamps actually occur."""
    n = draw(st.integers(0, max_size))
    issues = []
    for number in range(1, n + 1):
        created = draw(st.integers(0, 200))
        closed = draw(st.one_of(st.none(), st.integers(0, 150)))
        issues.append(
            IssueRecord(
                number=number,
                created_at=T0 + timedelta(hours=created * grid_hours),
                closed_at=None if closed is None else T0 + timedelta(hours=(created + closed) * grid_hours),
                priority=draw(st.sampled_from(list(Priority))),
                kind=draw(st.sampled_from(list(IssueKind))),
            )
        )
    return issues


# -- acceptance reporting -----------------------------------------------------

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    key = f"{marker.args[0]}. {marker.args[1]}"
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        previous = _ACCEPTANCE.get(key, ("PASS", ""))[0]
        status = "PASS" if report.outcome == "passed" and previous == "PASS" else "FAIL"
        _ACCEPTANCE[key] = (status, item.name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k.split(".")[0])):
        status, _ = _ACCEPTANCE[key]
        terminalreporter.write_line(f"[{status}] {key}")
