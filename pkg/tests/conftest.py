import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

EXAMPLES = Path(__file__).resolve().parents[1] / "src" / "defect_photonics" / "examples"


@pytest.fixture
def examples_dir():
    return EXAMPLES


@pytest.fixture
def corpus(tmp_path):
    """Writable copy of the shipped example corpus."""
    for f in EXAMPLES.iterdir():
        if f.is_file():
            (tmp_path / f.name).write_bytes(f.read_bytes())
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
