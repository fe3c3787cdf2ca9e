import mpmath
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")



@pytest.fixture(autouse=True)
def _mp_precision():
    # references are computed at 600 bits unless a test asks for less
    with mpmath.workprec(600):
        yield


_criteria: dict[str, tuple[int, str]] = {}
_results: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion, reported in the summary")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criteria[item.nodeid] = (m.args[0], m.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    number, title = _criteria[report.nodeid]
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    _results[number] = ("PASS" if report.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        status, title, detail = _results[number]
        line = f"criterion {number:>2} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
