import math

import numpy as np
import pytest

from src.attacks import (
    ActuatorAttack,
    AttackInjections,
    AttackSpec,
    NeighbourAttack,
    SensorAttack,
    actuate,
    apply_actuator,
    apply_neighbour,
    apply_sensor,
    create_attack,
    sense,
)
from src.errors import ConfigurationError
from src.topology import DirectedWeightedGraph

CASE1 = AttackSpec(id="actuator1", kind="actuator", target=0, window=(50.0, 70.0), signal=("2*sin(t/4)", "3*sin(4*t)"))
CASE2 = AttackSpec(id="sensor3", kind="sensor", target=2, window=(50.0, 70.0), signal=("4*sin(t/4)", "5*sin(5*t)"))
CASE3 = AttackSpec(
    id="link3to2", kind="neighbour", target=1, source=2, window=(50.0, 70.0), signal=("-4*sin(t)", "3*cos(t)")
)


def test_actuator_outside_window_is_untouched():
    u = np.array([0.3, -0.1])
    for t in (0.0, 49.999, 70.001, 100.0):
        np.testing.assert_array_equal(apply_actuator(u, CASE1, t), u)


def test_actuator_at_window_start():
    np.testing.assert_allclose(apply_actuator(np.zeros(2), CASE1, 50.0), [2 * math.sin(12.5), 3 * math.sin(200.0)])
    np.testing.assert_allclose(apply_actuator(np.zeros(2), CASE1, 70.0), [2 * math.sin(17.5), 3 * math.sin(280.0)])


def test_actuator_injection_is_additive(rng):
    u = rng.normal(size=2)
    injected = apply_actuator(np.zeros(2), CASE1, 60.0)
    np.testing.assert_allclose(apply_actuator(u, CASE1, 60.0), u + injected)


def test_sensor_outside_window_and_zero_signal():
    x = np.array([1.0, 2.0])
    np.testing.assert_array_equal(apply_sensor(x, CASE2, 10.0), x)
    silent = AttackSpec(id="zero", kind="sensor", target=0, window=(0.0, 1.0), signal=("0", "0*t"))
    np.testing.assert_array_equal(apply_sensor(x, silent, 0.5), x)


def test_sensor_inside_window():
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(apply_sensor(x, CASE2, 55.0), x + [4 * math.sin(55.0 / 4), 5 * math.sin(275.0)])


def test_neighbour_requires_existing_edge(ring_graph):
    reverse = AttackSpec(id="bad", kind="neighbour", target=2, source=1, window=(0.0, 1.0), signal=("1", "1"))
    with pytest.raises(ConfigurationError, match="does not exist"):
        apply_neighbour(np.zeros(2), reverse, 0.5, ring_graph)
    np.testing.assert_allclose(apply_neighbour(np.zeros(2), CASE3, 50.0, ring_graph), [-4 * math.sin(50.0), 3 * math.cos(50.0)])
    np.testing.assert_array_equal(apply_neighbour(np.ones(2), CASE3, 20.0, ring_graph), np.ones(2))


def test_neighbour_injection_reaches_only_targeted_receiver():
    # agent 1 broadcasts to agents 2 and 3; only 1 -> 2 is corrupted
    g = DirectedWeightedGraph.from_edges(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 0, 1.0), (2, 0, 1.0)], [1.0, 0, 0])
    spec = AttackSpec(id="edge", kind="neighbour", target=1, source=0, window=(0.0, 1.0), signal=("2", "-1"))
    channel = create_attack(spec)
    channel.validate(3, 2, g)
    injections = AttackInjections.build([channel], np.array([0.5]), 3, 2)
    states = np.array([[1.0, 1.0], [0.0, 0.0], [5.0, 5.0]])
    view = sense(states, injections.at(0))
    np.testing.assert_allclose(view.neighbour[1, 0] - view.neighbour[2, 0], [2.0, -1.0])
    np.testing.assert_array_equal(view.neighbour[2, 0], states[0])
    np.testing.assert_array_equal(view.sensor, states)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        AttackSpec(id="a", kind="network", target=0, window=(0.0, 1.0), signal=("0",))
    with pytest.raises(ConfigurationError):
        AttackSpec(id="a", kind="actuator", target=0, window=(2.0, 1.0), signal=("0",))
    with pytest.raises(ConfigurationError):
        AttackSpec(id="a", kind="neighbour", target=0, window=(0.0, 1.0), signal=("0",))
    with pytest.raises(ConfigurationError):
        AttackSpec(id="a", kind="sensor", target=0, source=1, window=(0.0, 1.0), signal=("0",))


def test_channel_validation():
    with pytest.raises(ConfigurationError, match="target"):
        create_attack(CASE2).validate(2, 2)
    with pytest.raises(ConfigurationError, match="components"):
        create_attack(CASE1).validate(3, 3)


def test_create_attack_dispatches_on_kind():
    assert isinstance(create_attack(CASE1), ActuatorAttack)
    assert isinstance(create_attack(CASE2), SensorAttack)
    assert isinstance(create_attack(CASE3), NeighbourAttack)
    assert create_attack(CASE3).settings["source"] == 2


def test_gate_is_inclusive():
    channel = create_attack(CASE1)
    times = np.array([49.9, 50.0, 60.0, 70.0, 70.1])
    np.testing.assert_array_equal(channel.gate(times), [0.0, 1.0, 1.0, 1.0, 0.0])
    assert channel.gate(50.0) == 1.0


def test_grid_injections_match_pointwise_evaluation():
    channels = [create_attack(spec) for spec in (CASE1, CASE2, CASE3)]
    times = np.linspace(45.0, 75.0, 301)
    injections = AttackInjections.build(channels, times, 3, 2)
    assert injections.ids == ("actuator1", "sensor3", "link3to2")
    for step in (0, 50, 51, 150, 250, 251, 300):
        t = times[step]
        np.testing.assert_allclose(injections.actuator[step, 0], apply_actuator(np.zeros(2), CASE1, t), atol=1e-12)
        np.testing.assert_allclose(injections.sensor[step, 2], apply_sensor(np.zeros(2), CASE2, t), atol=1e-12)
        np.testing.assert_allclose(injections.neighbour[step, 1, 2], apply_neighbour(np.zeros(2), CASE3, t), atol=1e-12)
        assert list(injections.flags[step]) == [50.0 <= t <= 70.0] * 3


def test_actuate_adds_injection_to_inputs():
    channel = create_attack(CASE1)
    injections = AttackInjections.build([channel], np.array([50.0]), 3, 2)
    view = sense(np.zeros((3, 2)), injections.at(0))
    u = np.ones((3, 2))
    view = actuate(view, u, injections.at(0))
    np.testing.assert_allclose(view.actuator[0], 1.0 + np.array([2 * math.sin(12.5), 3 * math.sin(200.0)]))
    np.testing.assert_array_equal(view.actuator[1:], u[1:])
