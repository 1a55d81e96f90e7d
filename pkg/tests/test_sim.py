import copy
import math

import numpy as np
import pytest

from src.attacks import StepInjections
from src.control import FormationSpec, global_error, local_error
from src.detection import attack_effects, load_bounds, save_bounds
from src.errors import AttackRefusalError, DivergenceError, GainConditionError, ScenarioParseError
from src.sim import (
    ClosedLoop,
    DisturbanceModel,
    calibrate,
    disturbance_eval,
    dump_scenario,
    leader_step,
    load_scenario,
    parse_scenario,
    resolve_bounds,
    run,
    scenario_to_dict,
    simulate,
)
from src.topology import build_laplacian
from src.utils import VectorExpression, write_trace_csv

BUNDLED = ["example1_attack_free", "example1_case1", "example1_case2", "example1_case3"]


# scenario files


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_load(name):
    scenario = load_scenario(name)
    assert scenario.name == name
    assert scenario.n_agents == 3
    assert scenario.horizon == 100_000
    assert scenario.duration == pytest.approx(100.0)
    assert len(scenario.attacks) == (0 if name.endswith("attack_free") else 1)


def test_case3_targets_an_existing_edge():
    attack = load_scenario("example1_case3").attack("link3to2")
    assert (attack.source, attack.target) == (2, 1)


def test_scenario_round_trip(attacked_scenario, tmp_path):
    assert parse_scenario(scenario_to_dict(attacked_scenario)) == attacked_scenario
    path = dump_scenario(attacked_scenario, tmp_path / "copy.toml")
    assert load_scenario(path) == attacked_scenario


def test_unknown_key_is_reported_with_its_path(small_data):
    small_data["control"]["gain"] = 1.0
    with pytest.raises(ScenarioParseError) as excinfo:
        parse_scenario(small_data)
    assert excinfo.value.key == "control"
    assert "gain" in str(excinfo.value)


def test_missing_key(small_data):
    del small_data["tuning"]["gamma"]
    with pytest.raises(ScenarioParseError) as excinfo:
        parse_scenario(small_data)
    assert excinfo.value.key == "tuning.gamma"


@pytest.mark.parametrize(
    "mutate, key",
    [
        (lambda d: d["topology"]["edges"][0].update({"to": 4}), "topology.edges[0].to"),
        (lambda d: d["topology"]["edges"][0].update({"to": 1}), "topology.edges[0]"),
        (lambda d: d["tuning"].update({"gamma": 1.0}), "tuning.gamma"),
        (lambda d: d["formation"].update({"offsets": [[0.0, 0.0]]}), "formation.offsets"),
        (lambda d: d["leader"].update({"builtin": "ex1"}), "leader"),
        (lambda d: d["leader"].update({"expressions": ["t", "__import__('os')"]}), "leader.expressions"),
        (lambda d: d["control"].update({"law": "proportional"}), "control.law"),
        (lambda d: d["disturbances"]["expressions"].update({"x": ["0", "0"]}), "disturbances.expressions.x"),
        (lambda d: d.update({"schema_version": 2}), "schema_version"),
    ],
)
def test_invalid_documents(small_data, mutate, key):
    mutate(small_data)
    with pytest.raises(ScenarioParseError) as excinfo:
        parse_scenario(small_data)
    assert excinfo.value.key == key


def _with_attack(data, **attack):
    entry = {"id": "a", "kind": "neighbour", "target": 2, "source": 3, "window": [0.1, 0.2], "signal": ["1", "1"]}
    entry.update(attack)
    data["attacks"] = [{k: v for k, v in entry.items() if v is not None}]
    return data


def test_neighbour_attack_on_missing_edge(small_data):
    with pytest.raises(ScenarioParseError, match="does not exist"):
        parse_scenario(_with_attack(small_data, source=1))


def test_attack_window_beyond_horizon(small_data):
    with pytest.raises(ScenarioParseError) as excinfo:
        parse_scenario(_with_attack(small_data, window=[0.1, 5.0]))
    assert excinfo.value.key == "attacks[0].window"


def test_attack_source_only_for_neighbour(small_data):
    with pytest.raises(ScenarioParseError):
        parse_scenario(_with_attack(small_data, kind="actuator"))
    with pytest.raises(ScenarioParseError):
        parse_scenario(_with_attack(small_data, source=None))


def test_unpinned_graph_fails_at_load_time(small_data):
    small_data["topology"]["pin_gains"] = [0.0, 0.0, 0.0]
    with pytest.raises(ScenarioParseError, match="pinned"):
        parse_scenario(small_data)


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(ScenarioParseError):
        load_scenario(tmp_path / "absent.toml")


# signals


def test_builtin_leader_trajectory(example1):
    traj = VectorExpression.parse(example1.leader.resolved)
    np.testing.assert_allclose(leader_step(0.0, traj), [2.0, 4.0])
    np.testing.assert_allclose(leader_step(1.0, traj), [3.0, 12.0])
    np.testing.assert_allclose(leader_step(np.array([0.0, 0.5]), traj), [[2.0, 4.0], [2.5, 8.0]])


def test_constant_leader():
    traj = VectorExpression.parse(["3", "-1"])
    np.testing.assert_array_equal(leader_step(42.0, traj), [3.0, -1.0])


def test_example_disturbances(example1):
    model = DisturbanceModel(3, 2, example1.disturbances)
    np.testing.assert_allclose(disturbance_eval(model, 0, 0.0), [0.0, 0.0])
    np.testing.assert_allclose(disturbance_eval(model, 1, 0.0), [0.02, 0.05])
    np.testing.assert_allclose(disturbance_eval(model, 2, math.pi / 6), [0.02, 0.01])
    assert model.peak_norm(np.linspace(0.0, 10.0, 1001)) <= math.hypot(0.02, 0.05) + 1e-12


def test_undeclared_agents_are_undisturbed():
    model = DisturbanceModel(2, 2, [(0, ("1", "2"))])
    np.testing.assert_array_equal(model(1, 5.0), [0.0, 0.0])
    assert model.grid(np.zeros(3)).shape == (3, 2, 2)


# engine


def _frozen_scenario(small_data):
    """Zero dynamics with the incremental law and zero gains: nothing moves."""
    small_data["dynamics"] = {"name": "linear", "params": {"A": [[0.0, 0.0], [0.0, 0.0]]}}
    small_data["control"].update(
        k=[[0.0, 0.0]] * 3, c=0.0, observer_gain=[[0.0, 0.0]] * 3, enforce_gain_conditions=False
    )
    small_data.pop("disturbances")
    return parse_scenario(small_data)


def test_zero_dynamics_and_gains_keep_states_constant(small_data):
    scenario = _frozen_scenario(small_data)
    trace = simulate(scenario).trace
    initial = np.array(scenario.initial_states)
    np.testing.assert_array_equal(trace.states, np.broadcast_to(initial, trace.states.shape))
    # with G = 0 the residual is the previous formation error
    np.testing.assert_allclose(trace.residual[1:], trace.e[:-1], rtol=1e-12, atol=1e-12)
    np.testing.assert_array_equal(trace.weight_norms, np.zeros_like(trace.weight_norms))


def test_trace_shapes(small_scenario):
    trace = simulate(small_scenario).trace
    assert trace.n_steps == 400
    assert trace.states.shape == (400, 3, 2)
    assert trace.leader.shape == (400, 2)
    assert trace.weight_norms.shape == (400, 3)
    assert trace.attack_flags.shape == (400, 0)
    np.testing.assert_array_equal(trace.residual[0], np.zeros((3, 2)))
    assert trace.step_at(0.1) == 100


def test_runs_are_deterministic(attacked_scenario, tmp_path):
    first = simulate(attacked_scenario).trace
    second = simulate(attacked_scenario).trace
    np.testing.assert_array_equal(first.states, second.states)
    np.testing.assert_array_equal(first.residual, second.residual)
    a = write_trace_csv(first, tmp_path / "a.csv").read_bytes()
    b = write_trace_csv(second, tmp_path / "b.csv").read_bytes()
    assert a == b


def test_zero_amplitude_attack_changes_nothing(small_data):
    clean = simulate(parse_scenario(copy.deepcopy(small_data))).trace
    _with_attack(small_data, signal=["0", "0*t"], window=[0.0, 0.4])
    silent = simulate(parse_scenario(small_data)).trace
    np.testing.assert_array_equal(silent.states, clean.states)
    np.testing.assert_array_equal(silent.residual, clean.residual)
    assert silent.attack_flags[:, 0].all()


def test_attack_flags_follow_windows(attacked_scenario):
    trace = simulate(attacked_scenario).trace
    assert trace.attack_ids == ("act", "sen", "nbr")
    assert trace.attack_flags[201:500, 0].all()
    assert not trace.attack_flags[:199, 0].any()
    assert not trace.attack_flags[502:, 0].any()


def _random_scenario(seed):
    rng = np.random.default_rng(seed)
    n_agents = int(rng.integers(3, 5))
    edges = [
        {"from": j + 1, "to": i + 1, "weight": float(rng.uniform(0.2, 1.0))}
        for i in range(n_agents)
        for j in range(n_agents)
        if i != j and (j == (i + 1) % n_agents or rng.random() < 0.4)
    ]
    pins = [float(rng.uniform(0.5, 1.5))] + [0.0] * (n_agents - 1)
    data = {
        "schema_version": 1,
        "name": f"random-{seed}",
        "state_dim": 2,
        "sample_period": 0.01,
        "horizon": 340,
        "topology": {"n_agents": n_agents, "pin_gains": pins, "edges": edges},
        "dynamics": {"name": "linear", "params": {"A": rng.uniform(-0.2, 0.2, size=(2, 2)).tolist()}},
        "formation": {"offsets": rng.uniform(-3.0, 3.0, size=(n_agents, 2)).tolist()},
        "control": {
            "k": rng.uniform(0.05, 0.2, size=(n_agents, 2)).tolist(),
            "c": 0.3,
            "observer_gain": rng.uniform(0.0, 0.25, size=(n_agents, 2)).tolist(),
            "enforce_gain_conditions": False,
        },
        "tuning": {"alpha": 0.05, "gamma": 0.1},
        "leader": {"expressions": ["sin(t)", "0.5*cos(2*t)"]},
        "initial": {"states": rng.uniform(-2.0, 2.0, size=(n_agents, 2)).tolist()},
        "disturbances": {"expressions": {"1": ["0.01*sin(t)", "0.02"]}},
    }
    return parse_scenario(data)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_error_dynamics_oracle(seed):
    scenario = _random_scenario(seed)
    result = simulate(scenario)
    trace, loop = result.trace, result.loop
    spec = FormationSpec(np.array(scenario.formation.offsets))
    bundle = build_laplacian(loop.graph, scenario.state_dim)
    for t in range(trace.n_steps - 1):
        x_next = loop.dynamics.step(trace.states[t], trace.u_applied[t], trace.disturbance[t])
        np.testing.assert_allclose(trace.states[t + 1], x_next, rtol=1e-12, atol=1e-12)
        stacked = np.concatenate(
            [local_error(i, trace.states[t + 1], trace.leader[t + 1], loop.graph, spec) for i in range(scenario.n_agents)]
        )
        deviation = trace.states[t + 1].reshape(-1) - np.tile(trace.leader[t + 1], scenario.n_agents) + spec.offsets.reshape(-1)
        np.testing.assert_allclose(stacked, -bundle.L_bar @ deviation, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(global_error(trace.states[t + 1], trace.leader[t + 1], bundle, spec), stacked, rtol=1e-9, atol=1e-9)
        np.testing.assert_allclose(trace.e[t + 1].reshape(-1), stacked, rtol=1e-9, atol=1e-9)


def _residual_closed_form(trace, loop):
    """Residuals rebuilt as sum_l G^(k-l-1) v(l) from logged quantities."""
    G = loop.gains.observer_gain
    drift = loop.dynamics.drift(trace.states)
    v = (
        drift
        - trace.f_hat
        + trace.disturbance
        + trace.e
        + (trace.u_applied - trace.u)
        + G * (trace.sensed - trace.states)
    )
    return G, v


@pytest.mark.parametrize("fixture_name", ["small_scenario", "attacked_scenario"])
def test_residual_recursion_oracle(request, fixture_name):
    scenario = request.getfixturevalue(fixture_name).with_horizon(1200)
    result = simulate(scenario)
    trace, loop = result.trace, result.loop
    G, v = _residual_closed_form(trace, loop)
    for k in list(range(1, 40)) + list(range(40, trace.n_steps, 97)) + [trace.n_steps - 1]:
        powers = G[None] ** (k - 1 - np.arange(k))[:, None, None]
        expected = (powers * v[:k]).sum(axis=0)
        np.testing.assert_allclose(trace.residual[k], expected, rtol=1e-9, atol=1e-9)


def test_attack_effect_identity(rng):
    scenario = load_scenario("example1_case3")
    loop = ClosedLoop(scenario)
    n, N = scenario.state_dim, scenario.n_agents
    zero = StepInjections(np.zeros((N, n)), np.zeros((N, n)), np.zeros((N, N, n)))
    for _ in range(100):
        x = rng.uniform(-6.0, 6.0, size=(N, n))
        x_hat = x + rng.normal(scale=0.5, size=(N, n))
        weights = rng.normal(size=(N, loop.basis.n_neurons, n))
        leader = rng.uniform(-6.0, 6.0, size=n)
        w = rng.normal(scale=0.05, size=(N, n))
        attacked = StepInjections(
            rng.normal(size=(N, n)), rng.normal(size=(N, n)), rng.normal(size=(N, N, n))
        )
        free = loop.step(x, x_hat, weights, leader, w, zero, np.zeros((N, n)))
        hit = loop.step(x, x_hat, weights, leader, w, attacked, np.zeros((N, n)), track_attack_effect=True)
        np.testing.assert_allclose(
            hit.residual_next - free.residual_next, hit.attack_effect, rtol=1e-12, atol=1e-12
        )
        np.testing.assert_allclose(
            hit.attack_effect, attack_effects(attacked, x, weights, loop.basis, loop.graph, loop.gains)
        )


def test_enforced_gain_conditions_stop_the_run(small_data):
    small_data["control"]["enforce_gain_conditions"] = True
    scenario = parse_scenario(small_data)
    with pytest.raises(GainConditionError) as excinfo:
        simulate(scenario)
    assert [c.name for c in excinfo.value.report.failed] == ["feedback_gain"]
    assert simulate(scenario, force=True).trace.n_steps == 400


def test_divergence_is_reported(small_data):
    small_data["dynamics"] = {"name": "linear", "params": {"A": [[10.0, 0.0], [0.0, 10.0]]}}
    small_data["control"].update(c=0.0, law="absolute")
    with pytest.raises(DivergenceError) as excinfo:
        simulate(parse_scenario(small_data))
    assert excinfo.value.step < 20


# calibration and runs


def test_calibration_refuses_attacked_scenarios(attacked_scenario):
    with pytest.raises(AttackRefusalError):
        calibrate(attacked_scenario)


def test_calibration_measures_bounds(small_scenario):
    result = calibrate(small_scenario, safety_factor=1.2, settle_time=0.1)
    bounds = result.bounds
    assert result.settle_step == 100
    assert bounds.phi_M == pytest.approx(3.0)
    assert bounds.w_M == pytest.approx(1.2 * math.hypot(0.02, 0.05), rel=0.05)
    assert bounds.e_M_source == "empirical"
    assert bounds.pi > bounds.observed_residual_max > 0.0
    assert bounds.F_M == pytest.approx(0.5, rel=1e-6)
    model = DisturbanceModel(3, 2, small_scenario.disturbances)
    assert bounds.w_M == pytest.approx(1.2 * model.peak_norm(result.simulation.trace.times))


def test_calibration_without_disturbances(small_data):
    small_data.pop("disturbances")
    bounds = calibrate(parse_scenario(small_data), settle_time=0.1).bounds
    assert bounds.w_M == 0.0


def test_run_with_explicit_bounds(small_scenario):
    bounds = calibrate(small_scenario, settle_time=0.1).bounds
    result = run(small_scenario, bounds=bounds)
    assert result.report.threshold == bounds.pi
    assert result.report.norms.shape == (400, 3)
    assert result.bounds is bounds


def test_bounds_read_from_file_relative_to_scenario(small_data, tmp_path):
    bounds = calibrate(parse_scenario(copy.deepcopy(small_data)), settle_time=0.1).bounds
    save_bounds(bounds, tmp_path / "bounds.toml")
    small_data["detection"]["bounds"] = "bounds.toml"
    scenario = parse_scenario(small_data, base_dir=tmp_path)
    assert resolve_bounds(scenario) == load_bounds(tmp_path / "bounds.toml")


def test_run_reports_latencies(attacked_scenario):
    result = run(attacked_scenario, settle_time=0.1)
    assert set(result.report.latencies) == {"act", "sen", "nbr"}
