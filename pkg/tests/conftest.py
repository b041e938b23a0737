from importlib import resources
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def synthetic_gdp() -> Path:
    return Path(str(resources.files("recession_cascade.data").joinpath("synthetic_gdp.csv")))


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


ACCEPTANCE: dict[str, tuple[str, str]] = {}


def record(criterion: str, passed: bool | None, detail: str) -> None:
    """Register one criterion outcome; ``None`` marks a data-dependent skip."""
    status = "SKIPPED-NO-DATA" if passed is None else ("PASS" if passed else "FAIL")
    ACCEPTANCE[criterion] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE, key=lambda c: int(c.split()[0])):
        status, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"{status:<16} {criterion}: {detail}")
