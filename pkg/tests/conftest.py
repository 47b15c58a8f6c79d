import hypothesis
import pytest

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

# (criterion number, title, outcome, detail) for every test marked ``criterion``
_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion test")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = getattr(item, "criterion_detail", "")
        if not rep.passed and not detail:
            detail = str(rep.longrepr).strip().splitlines()[-1][:160] if rep.longrepr else ""
        _CRITERIA.append((mark.args[0], mark.args[1], rep.outcome, detail))


@pytest.fixture
def report(request):
    """Attach a one-line measurement to the acceptance summary."""
    def _set(text):
        request.node.criterion_detail = text
        print(text)
    return _set


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, outcome, detail in sorted(_CRITERIA):
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {n:>2} {status}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
