import os

import pytest
from hypothesis import HealthCheck, settings

from flatdse.config import PRESET_DIR, hardware_from_dict, read_json, workload_from_dict

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def preset_hw(name):
    data, _ = read_json(PRESET_DIR / "hardware" / f"{name}.json")
    return hardware_from_dict(data)


def preset_model(name, **changes):
    data, _ = read_json(PRESET_DIR / "models" / f"{name}.json")
    return workload_from_dict(data).replace(**changes)


@pytest.fixture(scope="session")
def cloud():
    return preset_hw("cloud")


@pytest.fixture(scope="session")
def edge():
    return preset_hw("edge")


# one summary line per acceptance criterion, printed after the run
_CRITERIA = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        _CRITERIA[number] = (bool(passed), detail)
        assert passed, f"criterion {number}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
