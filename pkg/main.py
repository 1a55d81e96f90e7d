"""Command line entry point for formation simulation and attack detection."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src.config import Settings, load_settings
from src.detection import BoundSet, detectability_profile, save_bounds
from src.errors import (
    AttackRefusalError,
    ConfigurationError,
    DivergenceError,
    FormationError,
    GainConditionError,
)
from src.sim import ClosedLoop, calibrate, load_scenario, run
from src.sim.scenario import Scenario, scenario_to_dict
from src.utils import (
    create_run_folder,
    write_detection_csv,
    write_key_values,
    write_residual_files,
    write_trace_csv,
)

logger = logging.getLogger("formation")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3
EXIT_REFUSED = 4

LOG_FORMAT = "%(levelname)s:%(asctime)s:%(name)s:%(message)s"


def _run_settings(scenario: Scenario, args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "scenario": scenario_to_dict(scenario),
        "force": args.force,
        "horizon_override": args.horizon_override,
    }


def _print_block(title: str, values: Dict[str, Any]) -> None:
    print(f"[{title}]")
    for key, value in values.items():
        if value is None:
            continue
        if isinstance(value, float):
            value = f"{value:.6g}"
        print(f"{key} = {value}")


def _threshold_line(bounds: BoundSet, scenario: Scenario) -> str:
    line = f"threshold pi = {bounds.pi:.6g}"
    if scenario.detection.reference_threshold is not None:
        line += f" (reference {scenario.detection.reference_threshold:g})"
    return line


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    """Run a scenario and write trace, detection report and summary."""
    scenario = load_scenario(args.scenario)
    result = run(
        scenario,
        force=args.force,
        horizon=args.horizon_override,
        safety_factor=settings.safety_factor,
        settle_time=_settle_time(scenario, settings),
    )
    trace, report, bounds = result.trace, result.report, result.bounds

    _, folder = create_run_folder("simulate", _run_settings(scenario, args), args.output_dir)
    write_trace_csv(trace, folder / "trace.csv")
    write_detection_csv(report, folder / "detection.csv")
    write_residual_files(report, trace.times, folder)
    save_bounds(bounds, folder / "bounds.toml")

    error_norms = trace.formation_error_norms()
    settled = trace.step_at(_settle_time(scenario, settings))
    summary: Dict[str, Any] = {
        "scenario": scenario.name,
        "steps": trace.n_steps,
        "gain_conditions_passed": result.gain_report.passed,
        "formation_error_initial": float(error_norms[0]),
        "formation_error_final": float(error_norms[-1]),
        "formation_error_max_after_settle": float(error_norms[settled:].max(initial=0.0)),
        "weight_norm_max": float(trace.weight_norms.max()),
        "pi": bounds.pi,
        "pi_reference": scenario.detection.reference_threshold,
        "e_M_source": bounds.e_M_source,
    }
    summary.update(report.summary())
    write_key_values(summary, folder / "summary.toml")
    logger.info("artifacts written to %s", folder)

    _print_block("summary", summary)
    print(_threshold_line(bounds, scenario))
    print(f"artifacts: {folder}")
    return EXIT_OK


def cmd_validate_gains(args: argparse.Namespace, settings: Settings) -> int:
    """Print every gain condition with its value, bounds and margin."""
    scenario = load_scenario(args.scenario)
    loop = ClosedLoop(scenario)
    report = loop.check_gains(force=True)
    print(report.summary())
    _print_block("gain_conditions", report.as_dict())
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace, settings: Settings) -> int:
    """Calibrate bound constants on an attack-free run and write the bound file."""
    scenario = load_scenario(args.scenario)
    safety_factor = args.safety_factor if args.safety_factor is not None else settings.safety_factor
    result = calibrate(
        scenario,
        safety_factor=safety_factor,
        settle_time=_settle_time(scenario, settings, args.settle_time),
        force=args.force,
        horizon=args.horizon_override,
    )
    bounds = result.bounds
    if args.output is not None:
        path = save_bounds(bounds, Path(args.output))
    else:
        _, folder = create_run_folder("calibrate", _run_settings(scenario, args), args.output_dir)
        path = save_bounds(bounds, folder / "bounds.toml")

    _print_block("bounds", {
        "w_M": bounds.w_M,
        "eps_M": bounds.eps_M,
        "W_M": bounds.W_M,
        "phi_M": bounds.phi_M,
        "F_M": bounds.F_M,
        "d_M": bounds.d_M,
        "mu_M": bounds.mu_M,
        "nu_M": bounds.nu_M,
        "e_M": bounds.e_M,
        "e_M_source": bounds.e_M_source,
        "pi": bounds.pi,
        "observed_residual_max": bounds.observed_residual_max,
    })
    print(_threshold_line(bounds, scenario))
    print(f"bound file: {path}")
    return EXIT_OK


def cmd_detectability(args: argparse.Namespace, settings: Settings) -> int:
    """Evaluate the detectability margin of one attack step by step."""
    scenario = load_scenario(args.scenario)
    attack = scenario.attack(args.attack_id)
    result = run(
        scenario,
        force=args.force,
        horizon=args.horizon_override,
        safety_factor=settings.safety_factor,
        settle_time=_settle_time(scenario, settings),
    )
    trace, bounds = result.trace, result.bounds
    agent = attack.target
    gain = np.asarray(scenario.control.observer_gain[agent])

    residual = trace.residual[:, agent]
    effect = trace.attack_effect[:-1, agent]
    nuisance = residual[1:] - gain * residual[:-1] - effect
    profile = detectability_profile(effect, gain, nuisance, bounds.pi)

    # profile entry k - 1 describes the residual at step k
    steps = np.arange(1, len(effect) + 1)
    times = steps * scenario.sample_period
    start, end = attack.window
    inside = (times >= start) & (times <= end)
    first = None
    if inside.any():
        window_steps = np.flatnonzero(inside)
        first = profile.first_detectable(int(window_steps[0]), int(window_steps[-1]) + 1)

    _, folder = create_run_folder("detectability", _run_settings(scenario, args), args.output_dir)
    pd.DataFrame(
        {
            "step": steps[inside],
            "t": times[inside],
            "attack_norm": profile.attack_norms[inside],
            "nuisance_norm": profile.nuisance_norms[inside],
            "margin": profile.margins[inside],
            "detectable": profile.detectable[inside].astype(int),
        }
    ).to_csv(folder / "detectability.csv", index=False, lineterminator="\n")

    stride = max(1, args.stride)
    for index in np.flatnonzero(inside)[::stride]:
        status = "detectable" if profile.detectable[index] else "not detectable"
        print(f"t = {times[index]:9.3f} s  margin = {profile.margins[index]:+.6g}  {status}")
    _print_block("detectability", {
        "attack": attack.id,
        "agent": agent + 1,
        "threshold": bounds.pi,
        "detectable_steps": int(profile.detectable[inside].sum()),
        "window_steps": int(inside.sum()),
        "first_detectable_t": None if first is None else float(times[first]),
        "max_margin": float(profile.margins[inside].max()) if inside.any() else None,
        "output": str(folder / "detectability.csv"),
    })
    return EXIT_OK


def _settle_time(scenario: Scenario, settings: Settings, override: Optional[float] = None) -> float:
    if override is not None:
        return override
    if scenario.detection.settle_time is not None:
        return scenario.detection.settle_time
    return settings.settle_time


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="formation-fdi",
        description="Leader-follower formation simulation with observer-based attack detection",
    )
    parser.add_argument("--log-level", default=settings.log_level, help="Logging level name")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="Scenario file, or the name of a bundled scenario")
    common.add_argument(
        "--output-dir", type=Path, default=settings.output_dir, help="Directory receiving run folders"
    )
    common.add_argument("--force", action="store_true", help="Run even if gain conditions fail")
    common.add_argument(
        "--horizon-override", type=int, default=None, metavar="STEPS", help="Replace the scenario horizon"
    )
    common.add_argument("--seed", type=int, default=None, help="Reserved; the model is deterministic")

    subparsers = parser.add_subparsers(dest="command", required=True)
    simulate_parser = subparsers.add_parser("simulate", parents=[common], help="Run a scenario")
    simulate_parser.set_defaults(handler=cmd_simulate)

    gains_parser = subparsers.add_parser("validate-gains", parents=[common], help="Check the gain conditions")
    gains_parser.set_defaults(handler=cmd_validate_gains)

    calibrate_parser = subparsers.add_parser(
        "calibrate", parents=[common], help="Measure bound constants on an attack-free run"
    )
    calibrate_parser.add_argument("--output", default=None, help="Bound file to write")
    calibrate_parser.add_argument("--safety-factor", type=float, default=None)
    calibrate_parser.add_argument("--settle-time", type=float, default=None, help="Transient to exclude [s]")
    calibrate_parser.set_defaults(handler=cmd_calibrate)

    detect_parser = subparsers.add_parser(
        "detectability", parents=[common], help="Step-wise detectability margin of one attack"
    )
    detect_parser.add_argument("attack_id", help="Identifier of the attack to analyse")
    detect_parser.add_argument("--stride", type=int, default=1000, help="Print every n-th window step")
    detect_parser.set_defaults(handler=cmd_detectability)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and map errors to exit codes."""
    settings = load_settings()
    parser = build_parser(settings)
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=LOG_FORMAT)
    if args.seed is not None:
        logger.warning("--seed %d ignored: the simulation has no random component", args.seed)

    try:
        return args.handler(args, settings)
    except GainConditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(exc.report.summary(), file=sys.stderr)
        return EXIT_INVALID
    except AttackRefusalError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigurationError, FormationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
