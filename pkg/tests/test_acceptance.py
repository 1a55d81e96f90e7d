"""Full-horizon checks on the bundled Example-1 scenarios."""

import numpy as np
import pytest

from src.detection import detect
from src.sim import calibrate, load_scenario, run, simulate
from src.utils import write_trace_csv

pytestmark = pytest.mark.slow

ATTACK_WINDOW = (50.0, 70.0)
ATTACKED_HORIZON = 75000  # [steps], window end plus the latency allowance


@pytest.fixture(scope="module")
def attack_free():
    return calibrate(load_scenario("example1_attack_free"), settle_time=20.0, force=True)


@pytest.fixture(scope="module")
def bounds(attack_free):
    return attack_free.bounds


@pytest.fixture(scope="module")
def attack_free_report(attack_free, bounds):
    trace = attack_free.simulation.trace
    return detect(trace.residual, bounds.pi, trace.sample_period)


@pytest.fixture(scope="module")
def case_runs(bounds):
    return {
        name: run(load_scenario(name), bounds=bounds, force=True, horizon=ATTACKED_HORIZON)
        for name in ("example1_case1", "example1_case2", "example1_case3")
    }


def test_formation_error_converges(attack_free):
    trace = attack_free.simulation.trace
    norms = trace.formation_error_norms()
    assert norms[0] == pytest.approx(np.sqrt(1335.0))
    assert norms[trace.step_at(20.0):].max() < 0.05 * norms[0]
    assert np.isfinite(norms).all()


def test_tracking_error_bounded_by_formation_error(attack_free):
    trace, loop = attack_free.simulation.trace, attack_free.simulation.loop
    delta = trace.tracking_error_norms(loop.formation.offsets)
    e = trace.formation_error_norms()
    assert np.all(delta <= e / loop.bundle.sigma_min_LB + 1e-9 * e)


def test_weight_norms_stay_bounded(attack_free):
    trace = attack_free.simulation.trace
    norms = trace.weight_norms
    half = trace.step_at(50.0)
    assert np.isfinite(norms).all()
    assert norms[half:].max() <= 1.5 * norms[:half].max() + 1e-9


def test_networks_keep_learning_after_the_transient(attack_free):
    trace = attack_free.simulation.trace
    settled = trace.step_at(20.0)
    assert np.all(trace.weight_norms[settled:].max(axis=0) > 1e-3)
    assert np.abs(trace.f_hat[settled:]).max() > 1e-4


def test_attack_free_residuals_stay_below_threshold(attack_free, attack_free_report, bounds):
    settled = attack_free.simulation.trace.step_at(10.0)
    assert attack_free_report.norms[settled:].max() < bounds.pi
    assert not attack_free_report.alarms[settled:].any()


def test_actuator_attack_detected_on_agent_1(case_runs):
    latency = case_runs["example1_case1"].report.latencies["actuator1"]
    assert latency is not None and latency <= 2.0


def test_sensor_attack_detected_on_agent_3(case_runs):
    latency = case_runs["example1_case2"].report.latencies["sensor3"]
    assert latency is not None and latency <= 2.0


@pytest.mark.xfail(
    strict=True,
    reason="the link injection only causes an onset transient in agent 2's residual, below the calibrated threshold",
)
def test_neighbour_attack_detected_on_agent_2(case_runs):
    latency = case_runs["example1_case3"].report.latencies["link3to2"]
    assert latency is not None and latency <= 2.0


def test_neighbour_attack_shows_in_agent_2_residual(case_runs, attack_free_report, attack_free):
    # the link attack only produces an onset transient well below pi
    steady = attack_free_report.norms[attack_free.simulation.trace.step_at(20.0):, 1].max()
    result = case_runs["example1_case3"]
    onset = slice(result.trace.step_at(ATTACK_WINDOW[0]), result.trace.step_at(ATTACK_WINDOW[0] + 2.0))
    assert result.report.norms[onset, 1].max() > 2.0 * steady


@pytest.mark.parametrize("name", ["example1_case1", "example1_case2", "example1_case3"])
def test_no_alarms_outside_attack_window(case_runs, name):
    report = case_runs[name].report
    assert report.alarm_steps_outside([ATTACK_WINDOW], margin=2.0, after=10.0) == 0


def test_bundled_runs_are_byte_identical(tmp_path):
    scenario = load_scenario("example1_case3")
    paths = []
    for index in range(2):
        trace = simulate(scenario, force=True, horizon=3000).trace
        paths.append(write_trace_csv(trace, tmp_path / f"trace{index}.csv"))
    assert paths[0].read_bytes() == paths[1].read_bytes()
