"""Run folders and the files written into them."""

import json
import logging
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import tomli_w

logger = logging.getLogger(__name__)

TRACE_FIELDS = ("x", "xhat", "sensed", "u", "u_applied", "e", "residual")


def create_run_folder(
    command: str, settings: Dict[str, Any], base_path: Optional[Path] = None
) -> Tuple[str, Path]:
    """Create a unique folder for one command invocation.

    Args:
        command: Subcommand name
        settings: Scenario and flag settings stored alongside the results
        base_path: Base directory for runs (default: ./runs)

    Returns:
        Tuple of (run_uuid, folder_path)
    """
    if base_path is None:
        base_path = Path.cwd() / "runs"

    run_uuid = str(uuid.uuid4())
    run_folder = Path(base_path) / run_uuid
    run_folder.mkdir(parents=True, exist_ok=True)

    run_data = {
        "timestamp": datetime.now().isoformat(),
        "uuid": run_uuid,
        "command": command,
        "settings": settings,
    }
    with open(run_folder / "run.json", "w", encoding="utf-8") as f:
        json.dump(run_data, f, indent=2, ensure_ascii=False)

    return run_uuid, run_folder


def trace_columns(n_agents: int, state_dim: int, attack_ids: Tuple[str, ...] = ()) -> List[str]:
    """Column order of the trace CSV.

    step, t, leader_1..n, then for every agent a<i> the components of
    x, xhat, sensed, u, u_applied, e and residual followed by the network
    weight norm, then one 0/1 column per declared attack.
    """
    columns = ["step", "t"] + [f"leader_{k + 1}" for k in range(state_dim)]
    for agent in range(n_agents):
        for name in TRACE_FIELDS:
            columns += [f"a{agent + 1}_{name}_{k + 1}" for k in range(state_dim)]
        columns.append(f"a{agent + 1}_weight_norm")
    columns += [f"attack_{attack_id}" for attack_id in attack_ids]
    return columns


def trace_frame(trace) -> pd.DataFrame:
    """Flatten a simulation trace into the documented column order."""
    steps, n_agents, state_dim = trace.states.shape
    arrays = {
        "x": trace.states,
        "xhat": trace.x_hat,
        "sensed": trace.sensed,
        "u": trace.u,
        "u_applied": trace.u_applied,
        "e": trace.e,
        "residual": trace.residual,
    }
    data: Dict[str, np.ndarray] = {"step": np.arange(steps), "t": trace.times}
    for k in range(state_dim):
        data[f"leader_{k + 1}"] = trace.leader[:, k]
    for agent in range(n_agents):
        for name in TRACE_FIELDS:
            for k in range(state_dim):
                data[f"a{agent + 1}_{name}_{k + 1}"] = arrays[name][:, agent, k]
        data[f"a{agent + 1}_weight_norm"] = trace.weight_norms[:, agent]
    for column, attack_id in enumerate(trace.attack_ids):
        data[f"attack_{attack_id}"] = trace.attack_flags[:, column].astype(int)
    return pd.DataFrame(data, columns=trace_columns(n_agents, state_dim, trace.attack_ids))


def write_trace_csv(trace, path: Path) -> Path:
    """Write the full trace; identical traces give byte-identical files."""
    trace_frame(trace).to_csv(path, index=False, lineterminator="\n")
    return Path(path)


def write_detection_csv(report, path: Path) -> Path:
    """One row per (step, agent): step, agent, residual_inf_norm, alarm."""
    steps, n_agents = report.norms.shape
    frame = pd.DataFrame(
        {
            "step": np.repeat(np.arange(steps), n_agents),
            "agent": np.tile(np.arange(1, n_agents + 1), steps),
            "residual_inf_norm": report.norms.reshape(-1),
            "alarm": report.alarms.reshape(-1).astype(int),
        }
    )
    frame.to_csv(path, index=False, lineterminator="\n")
    return Path(path)


def write_residual_files(report, times: np.ndarray, folder: Path) -> List[Path]:
    """Plot-ready residual_agent<i>.csv files: step, t, norm, threshold."""
    paths = []
    for agent in range(report.norms.shape[1]):
        path = Path(folder) / f"residual_agent{agent + 1}.csv"
        pd.DataFrame(
            {
                "step": np.arange(len(times)),
                "t": times,
                "norm": report.norms[:, agent],
                "threshold": np.full(len(times), report.threshold),
            }
        ).to_csv(path, index=False, lineterminator="\n")
        paths.append(path)
    return paths


def write_key_values(values: Dict[str, Any], path: Path) -> Path:
    """Write a flat key-value block as TOML; ``None`` values are dropped."""
    clean = {key: _plain(value) for key, value in values.items() if value is not None}
    with open(path, "wb") as f:
        tomli_w.dump(clean, f)
    return Path(path)


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return value
