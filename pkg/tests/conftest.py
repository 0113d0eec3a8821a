import pytest
from hypothesis import settings

# jit compilation on first use makes per-example timing meaningless
settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

_CRITERIA: dict = {}


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def report(number: int, name: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        _CRITERIA[number] = line
        with capsys.disabled():
            print("\n" + line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
