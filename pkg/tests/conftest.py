import pytest

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _ACCEPTANCE[label] = ("PASS" if rep.passed else "FAIL", detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: int(s.split(".")[0])):
        status, detail = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{status}  {label}" + (f"  [{detail}]" if detail else ""))
