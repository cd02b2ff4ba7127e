from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from carpetdyn import ifs as ifs_mod

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def cantor():
    return ifs_mod.middle_thirds()


@pytest.fixture
def carpet():
    return ifs_mod.sierpinski_carpet()


@pytest.fixture
def two_thirds():
    return ifs_mod.two_thirds_example()


@pytest.fixture
def cantor_file(tmp_path):
    path = tmp_path / "cantor.json"
    ifs_mod.dump_ifs(ifs_mod.middle_thirds(), path)
    return path


def pytest_terminal_summary(terminalreporter):
    import sys

    mods = [m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")]
    results = next((m.RESULTS for m in mods if getattr(m, "RESULTS", None)), {})
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
