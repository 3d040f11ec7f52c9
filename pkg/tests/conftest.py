"""
Configuration file for pytest.
"""

import sys
import os

# Add the project root to Python path so we can import our modules
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, project_root)

import pytest

from src.pipeline.moduli.models import Config


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale runs that take minutes")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("RUN_SLOW"):
        return
    skip_slow = pytest.mark.skip(reason="set RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def project_root_dir():
    """Provide the project root directory path."""
    return project_root


@pytest.fixture
def cache_dir(tmp_path):
    """Empty trace cache directory."""
    return tmp_path / "cache"


@pytest.fixture
def config(cache_dir):
    """Default run configuration with a private cache."""
    return Config(cache_dir=cache_dir)


@pytest.fixture
def uncached_config():
    return Config(use_cache=False)
