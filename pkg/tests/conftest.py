import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))


@pytest.fixture
def config_due_agenti():
    """Due agenti a 2 m, disco unitario da 10 m, rete completa."""
    return {
        "mode": "full_network",
        "world.n_agents": 2,
        "world.spawn": "line",
        "world.spacing": 2.0,
        "link_model.variant": "unit_disk",
        "link_model.radius": 10.0,
        "controller.type": "flocking",
        "harness.horizon": 10,
        "harness.trials": 1,
    }


@pytest.fixture
def config_propagazione():
    return {
        "mode": "propagation_only",
        "world.n_agents": 4,
        "world.spawn": "disk",
        "world.density": 5.0,
        "link_model.variant": "experimental_randomness",
        "controller.type": "formation",
        "harness.horizon": 30,
        "harness.trials": 2,
    }
