"""Threshold test on observer residuals."""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.detection.observer import residual_norms
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlarmInterval:
    """Contiguous alarm steps of one agent, both ends inclusive."""

    agent: int
    start_step: int
    end_step: int

    @property
    def length(self) -> int:
        return self.end_step - self.start_step + 1


@dataclass(eq=False)
class DetectionReport:
    """Per-step residual norms, alarm flags and merged alarm intervals.

    Attributes:
        threshold: Threshold pi used for the decision
        norms: (T, N) residual infinity norms
        alarms: (T, N) boolean alarm flags
        intervals: Alarm intervals ordered by agent then start step
        sample_period: Seconds per step
        latencies: Detection latency in seconds per attack id (None when missed)
    """

    threshold: float
    norms: np.ndarray
    alarms: np.ndarray
    intervals: List[AlarmInterval]
    sample_period: float = 1.0
    latencies: Dict[str, Optional[float]] = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return self.norms.shape[1]

    def intervals_for(self, agent: int) -> List[AlarmInterval]:
        return [iv for iv in self.intervals if iv.agent == agent]

    def first_alarm(self, agent: int, from_step: int = 0) -> Optional[int]:
        """First alarm step of ``agent`` at or after ``from_step``."""
        hits = np.flatnonzero(self.alarms[from_step:, agent])
        return int(hits[0]) + from_step if hits.size else None

    def alarm_steps_outside(
        self, windows: Sequence[tuple], margin: float = 0.0, after: float = 0.0
    ) -> int:
        """Count alarm flags raised after ``after`` seconds outside every window +- margin."""
        times = np.arange(self.alarms.shape[0]) * self.sample_period
        allowed = times < after
        for start, end in windows:
            allowed |= (times >= start - margin) & (times <= end + margin)
        return int(self.alarms[~allowed].sum())

    def summary(self) -> Dict[str, object]:
        """Key-value summary block."""
        values: Dict[str, object] = {
            "threshold": self.threshold,
            "alarm_intervals": len(self.intervals),
            "alarm_steps": int(self.alarms.sum()),
        }
        for agent in range(self.n_agents):
            values[f"agent{agent + 1}.max_residual_inf_norm"] = float(self.norms[:, agent].max(initial=0.0))
            values[f"agent{agent + 1}.alarm_intervals"] = ";".join(
                f"{iv.start_step * self.sample_period:.3f}-{iv.end_step * self.sample_period:.3f}"
                for iv in self.intervals_for(agent)
            )
        for attack_id, latency in self.latencies.items():
            values[f"latency.{attack_id}"] = "missed" if latency is None else latency
        return values


def _merge(flags: np.ndarray, agent: int) -> List[AlarmInterval]:
    padded = np.concatenate(([0], flags.astype(np.int8), [0]))
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return [AlarmInterval(agent, int(s), int(e)) for s, e in zip(starts, ends)]


def detect(residuals: np.ndarray, pi: float, sample_period: float = 1.0) -> DetectionReport:
    """Raise an alarm for agent i at step t iff ||x_tilde_i(t)||_inf >= pi.

    Args:
        residuals: (T, N, n) residual history
        pi: Detection threshold
        sample_period: Seconds per step, used for reporting

    Returns:
        DetectionReport with contiguous alarm steps merged into intervals

    Raises:
        ConfigurationError: If pi is not a positive finite number
    """
    if not (math.isfinite(pi) and pi > 0.0):
        raise ConfigurationError(f"threshold must be positive and finite, got {pi}")
    norms = residual_norms(residuals)
    alarms = norms >= pi
    intervals: List[AlarmInterval] = []
    for agent in range(norms.shape[1]):
        intervals.extend(_merge(alarms[:, agent], agent))
    logger.debug("detection at pi=%.6g: %d intervals", pi, len(intervals))
    return DetectionReport(pi, norms, alarms, intervals, sample_period)


def annotate_latencies(report: DetectionReport, attacks: Sequence, tolerance: float = 2.0) -> None:
    """Record, per attack, the delay from window start to the first alarm on its target.

    Only alarms inside [t_start, t_end + tolerance] count; otherwise the
    attack is recorded as missed.
    """
    for attack in attacks:
        start, end = attack.window
        first_step = int(math.ceil(start / report.sample_period - 1e-9))
        if first_step >= report.alarms.shape[0]:
            report.latencies[attack.id] = None
            continue
        hit = report.first_alarm(attack.target, first_step)
        if hit is not None and hit * report.sample_period <= end + tolerance:
            report.latencies[attack.id] = hit * report.sample_period - start
        else:
            report.latencies[attack.id] = None
