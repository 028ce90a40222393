import pytest

ACCEPTANCE = {
    1: "transform fidelity",
    2: "energy identity, second order",
    3: "conservative limit",
    4: "monotonicity oracle",
    5: "nonlinear damping decay exponent",
    6: "Gronwall envelope",
    7: "interpolation inequality",
    8: "time-Hoelder inequality",
    9: "Strichartz bootstrap shape",
    10: "dissipativity",
    11: "rate-envelope algebra",
    12: "determinism",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _outcomes.setdefault(n, []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in ACCEPTANCE.items():
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {name:34s} {status}")
