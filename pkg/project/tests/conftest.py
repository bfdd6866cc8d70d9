import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

PROJECT_ROOT = Path(__file__).resolve().parents[1]
LIB_DIR = PROJECT_ROOT / "lib"

# The jlab modules are imported as top-level modules, as main.py does.
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))
if str(LIB_DIR) not in sys.path:
    sys.path.insert(0, str(LIB_DIR))

# Groebner-heavy properties get few examples and no deadline.
settings.register_profile(
    "jlab",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("JLAB_HYPOTHESIS_PROFILE", "jlab"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long symbolic or high-precision computations")


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow") or os.environ.get("JLAB_RUN_SLOW"):
        return
    skip = pytest.mark.skip(reason="slow; use --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _quiet_event_log(tmp_path, monkeypatch):
    """Send the event log of every test to its own temporary file."""
    import eventlog

    monkeypatch.setattr(eventlog, "_LOG_PATH", str(tmp_path / "jlab_event_log.txt"))
    monkeypatch.setattr(eventlog, "_LOG_ENABLED", True)
    eventlog._initialize_state()
    yield
    eventlog._initialize_state()
