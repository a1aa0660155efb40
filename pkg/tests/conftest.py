import csv
import io

import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            num, title = m.args
            _CRITERIA.setdefault(num, {"title": title, "outcomes": []})


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    num = getattr(report, "_criterion", None)
    if num is not None:
        _CRITERIA[num]["outcomes"].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = m.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        info = _CRITERIA[num]
        outs = info["outcomes"]
        if not outs:
            verdict = "NOT RUN"
        elif all(o == "passed" for o in outs):
            verdict = "PASS"
        else:
            verdict = "FAIL"
        tr.write_line(f"criterion {num:2d}: {verdict:7s} {info['title']}")


def read_csv(path):
    """Rows of a tiltwalk CSV as dicts, skipping the schema comment line."""
    text = "".join(ln for ln in open(path) if not ln.startswith("#"))
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("TILTWALK_CACHE_DIR", str(tmp_path / "cache"))
