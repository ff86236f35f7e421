import pytest

CRITERIA = {
    1: "phase correlation shifts",
    2: "DTW against exhaustive paths",
    3: "perfect mirror detection",
    4: "Bayes fusion vs Monte-Carlo",
    5: "stitch construction",
    6: "PFA dictionary",
    7: "(i,p,c)-mirror",
    8: "threshold monotonicity",
    9: "directional reproductions",
    10: "end-to-end smoke",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call" or rep.failed or rep.skipped:
        _outcomes[n] = _outcomes.get(n, True) and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        verdict = "PASS" if _outcomes[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2} ({CRITERIA.get(n, '?')}): {verdict}")
