"""Shared fixtures."""

import os
import sys

import numpy as np
import pytest

# make the in-repo package importable without installing it
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from spraylab.integrators import IntegratorConfig  # noqa: E402
from spraylab.lie_algebra import catalog  # noqa: E402


@pytest.fixture
def su2():
    return catalog("su2")


@pytest.fixture
def heisenberg():
    return catalog("heisenberg3")


@pytest.fixture
def solvable2():
    return catalog("solvable2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tight():
    return IntegratorConfig()
