"""
Shared fixtures for the Facet test suite.

Long acceptance runs are marked `slow` and skipped unless `--run-slow` is given.
"""

import os
import sys

import numpy as np
import pytest

# Add parent directory to path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

os.environ.setdefault("FACET_SHOW_PROGRESS", "false")

from src.data.schema import SynthConfig
from src.data.synthetic import generate_domains
from src.network.model import NetworkConfig


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False,
                     help="Run slow end-to-end benchmark tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long end-to-end run, needs --run-slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


TINY_NETWORK = NetworkConfig(widths=(4, 8, 8), asc_channels=4, meta_hidden=8)
TINY_SYNTH = SynthConfig(image_size=16, n_domains=3, samples_per_domain=16, seed=0)


@pytest.fixture(scope="session")
def tiny_network_cfg():
    return TINY_NETWORK


@pytest.fixture(scope="session")
def tiny_domains():
    """Three 16x16 synthetic domains of 8 live / 8 spoof samples."""
    return generate_domains(TINY_SYNTH)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
