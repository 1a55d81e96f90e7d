import copy

import numpy as np
import pytest

from src.sim.scenario import load_scenario, parse_scenario
from src.topology.graph import DirectedWeightedGraph, build_laplacian

SMALL_SCENARIO = {
    "schema_version": 1,
    "name": "small",
    "state_dim": 2,
    "sample_period": 0.001,
    "horizon": 400,
    "topology": {
        "n_agents": 3,
        "pin_gains": [1.0, 0.0, 0.0],
        "edges": [
            {"from": 1, "to": 3, "weight": 1.0},
            {"from": 3, "to": 2, "weight": 1.0},
            {"from": 2, "to": 1, "weight": 1.0},
        ],
    },
    "dynamics": {"name": "paper_ex1"},
    "formation": {"offsets": [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]},
    "control": {
        "k": [[0.2, 0.2], [0.2, 0.2], [0.2, 0.2]],
        "c": 0.7,
        "observer_gain": [[0.23, 0.23], [0.23, 0.23], [0.23, 0.23]],
        "law": "incremental",
        "enforce_gain_conditions": False,
    },
    "tuning": {"alpha": 0.1, "gamma": 0.1},
    "basis": {"extent": [-2.0, 2.0], "per_axis": 3, "width": 2.0},
    "leader": {"expressions": ["0.5*sin(t)", "0.5*cos(t)"]},
    "initial": {"states": [[0.5, -0.5], [0.2, 0.4], [-0.3, 0.1]]},
    "disturbances": {
        "expressions": {
            "1": ["0.01*sin(2*t)", "0.05*sin(2*t)"],
            "2": ["0.02*cos(3*t)", "0.05*cos(3*t)"],
        }
    },
    "detection": {"bounds": "calibrate", "settle_time": 0.1},
}


@pytest.fixture
def small_data():
    """Mutable copy of a short three-agent scenario document."""
    return copy.deepcopy(SMALL_SCENARIO)


@pytest.fixture
def small_scenario(small_data):
    return parse_scenario(small_data)


@pytest.fixture
def attacked_scenario(small_data):
    """Short scenario with one attack of every kind inside the horizon."""
    small_data["horizon"] = 1200
    small_data["attacks"] = [
        {"id": "act", "kind": "actuator", "target": 1, "window": [0.2, 0.5], "signal": ["0.3*sin(4*t)", "0.2"]},
        {"id": "sen", "kind": "sensor", "target": 3, "window": [0.4, 0.8], "signal": ["0.5*sin(5*t)", "-0.3"]},
        {
            "id": "nbr",
            "kind": "neighbour",
            "target": 2,
            "source": 3,
            "window": [0.6, 1.0],
            "signal": ["-0.4*sin(t)", "0.3*cos(t)"],
        },
    ]
    return parse_scenario(small_data)


@pytest.fixture
def ring_graph():
    """Ring 1 -> 3 -> 2 -> 1 with the leader pinned to agent 1."""
    return DirectedWeightedGraph.from_edges(3, [(0, 2, 1.0), (2, 1, 1.0), (1, 0, 1.0)], [1.0, 0.0, 0.0])


@pytest.fixture
def ring_bundle(ring_graph):
    return build_laplacian(ring_graph, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def example1():
    return load_scenario("example1_attack_free")
