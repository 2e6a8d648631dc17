import pytest

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, name = mark.args
    row = _CRITERIA.setdefault(n, {"name": name, "ok": True, "time": 0.0, "log": []})
    row["log"] += [v for k, v in rep.user_properties if k == "log" and rep.when == "call"]
    row["ok"] &= not rep.failed
    row["time"] += rep.duration


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        row = _CRITERIA[n]
        verdict = "PASS" if row["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {n} {verdict}: {row['name']} ({row['time']:.1f} s)")
        for line in row["log"]:
            terminalreporter.write_line(f"    {line}")
