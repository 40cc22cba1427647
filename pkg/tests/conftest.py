# -*- coding: utf-8 -*-
"""Defines fixtures available to all tests."""

import logging

import numpy as np
import pytest
from click.testing import CliRunner
from factory.random import reseed_random

from kdgpsim.app import create_app
from kdgpsim.basis import build_basis
from kdgpsim.network import NetworkGraph

from .factories import KernelHyperparamsFactory


@pytest.fixture(autouse=True)
def _seed_factories():
    """Make factory-generated values reproducible."""
    reseed_random(1234)


@pytest.fixture
def app():
    """Create application for the tests."""
    _app = create_app("tests.settings")
    logging.getLogger("kdgpsim").setLevel(logging.CRITICAL)
    return _app


@pytest.fixture
def runner():
    """Click test runner."""
    return CliRunner()


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(20240501)


@pytest.fixture
def hp():
    """Smooth kernel with small noise."""
    return KernelHyperparamsFactory()


@pytest.fixture
def basis(hp):
    """Thirty eigenfunctions on [-1, 1]^2."""
    return build_basis(30, 1.0, hp)


@pytest.fixture
def path_graph():
    """Five sensors on a line, neighbours 0.25 apart: diameter 4."""
    positions = [(0.1 + 0.2 * i, 0.5) for i in range(5)]
    return NetworkGraph.from_positions(positions, d_comm=0.25)
