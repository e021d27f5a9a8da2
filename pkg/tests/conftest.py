import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one line per acceptance criterion, repeated in the terminal summary
CRITERION_LINES: list[str] = []


@pytest.fixture
def record_criterion(capsys):
    def record(number: int, name: str, passed: bool, seconds: float, note: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} ({seconds:.1f}s)"
        if note:
            line += f" {note}"
        CRITERION_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
