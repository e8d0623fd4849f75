import numpy as np
import pytest

VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    log = request.config.stash.setdefault(VERDICTS, [])

    def record(number: int, title: str, checks: dict, detail: str = ""):
        failed = [k for k, ok in checks.items() if not ok]
        line = f"{'FAIL' if failed else 'PASS'} criterion {number:>2}: {title}"
        if detail:
            line += f" [{detail}]"
        if failed:
            line += " failed: " + ", ".join(failed)
        log.append(line)
        print(line)
        assert not failed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
