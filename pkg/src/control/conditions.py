"""Sufficient gain conditions for bounded formation and observer errors."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from src.control.formation import ControlGains
from src.network.rbf import TuningParams
from src.topology.graph import LaplacianBundle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of one gain condition lower < value < upper."""

    name: str
    number: int
    description: str
    value: float
    lower: Optional[float]
    upper: float
    passed: bool

    @property
    def margin(self) -> float:
        """Signed distance to the nearest bound; negative when violated."""
        margin = self.upper - self.value
        if self.lower is not None:
            margin = min(margin, self.value - self.lower)
        return margin

    @property
    def label(self) -> str:
        """Name plus the condition number used in reports, e.g. 'feedback_gain, condition (29)'."""
        return f"{self.name}, condition ({self.number})"


@dataclass(frozen=True)
class GainReport:
    """Per-condition results plus the intermediate quantities they use."""

    conditions: List[ConditionResult]
    eta: float
    sigma_max_K: float
    sigma_max_P: float
    sigma_max_G: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def failed(self) -> List[ConditionResult]:
        return [c for c in self.conditions if not c.passed]

    def as_dict(self) -> Dict[str, float]:
        """Flat key-value view used for machine-readable output."""
        values = {
            "eta": self.eta,
            "sigma_max_K": self.sigma_max_K,
            "sigma_max_P": self.sigma_max_P,
            "sigma_max_G": self.sigma_max_G,
            "passed": self.passed,
        }
        for c in self.conditions:
            values[f"{c.name}.value"] = c.value
            values[f"{c.name}.upper"] = c.upper
            if c.lower is not None:
                values[f"{c.name}.lower"] = c.lower
            values[f"{c.name}.margin"] = c.margin
            values[f"{c.name}.passed"] = c.passed
        return values

    def summary(self) -> str:
        """Human readable report, one line per condition."""
        lines = []
        for c in self.conditions:
            status = "PASS" if c.passed else "FAIL"
            lower = f"{c.lower:.6g} < " if c.lower is not None else ""
            lines.append(
                f"[{status}] {c.label}: {lower}{c.value:.6g} < {c.upper:.6g}  "
                f"(margin {c.margin:+.6g})  {c.description}"
            )
        return "\n".join(lines)


def _inverse(value: float) -> float:
    return math.inf if value == 0.0 else 1.0 / value


def compute_eta(alpha: float, phi_max: float) -> float:
    """eta = 1 + (1 - alpha * phi_max^2)^-1, infinite when alpha * phi_max^2 >= 1."""
    slack = 1.0 - alpha * phi_max**2
    if slack <= 0.0:
        return math.inf
    return 1.0 + 1.0 / slack


def feedback_matrix(gains: ControlGains, bundle: LaplacianBundle) -> np.ndarray:
    """P = I - K L_bar."""
    return np.eye(bundle.L_bar.shape[0]) - gains.K @ bundle.L_bar


def sigma_max(matrix: np.ndarray) -> float:
    """Largest singular value of a dense matrix."""
    return float(np.linalg.svd(matrix, compute_uv=False).max())


def validate_gains(
    gains: ControlGains, bundle: LaplacianBundle, tuning: TuningParams, phi_max: float
) -> GainReport:
    """Check the coupling, feedback, learning-rate and observer gain conditions.

    Args:
        gains: Controller and observer gains
        bundle: Laplacian bundle of the communication graph
        tuning: Weight tuning parameters
        phi_max: Activation norm bound

    Returns:
        GainReport; failures are carried in the report, never raised
    """
    eta = compute_eta(tuning.alpha, phi_max)
    sigma_K = float(np.abs(gains.k).max())
    sigma_P = sigma_max(feedback_matrix(gains, bundle))
    sigma_G = float(np.abs(gains.observer_gain).max())

    coupling_upper = _inverse(bundle.sigma_max_Lbar)
    feedback_upper = _inverse(math.sqrt(eta * sigma_P**2)) if math.isfinite(eta) else 0.0
    learning_upper = _inverse(phi_max**2)
    observer_upper = _inverse(math.sqrt(eta)) if math.isfinite(eta) else 0.0

    conditions = [
        ConditionResult(
            name="coupling_gain",
            number=28,
            description="0 < sigma_max(K) < 1/sigma_max(L_bar)",
            value=sigma_K,
            lower=0.0,
            upper=coupling_upper,
            passed=0.0 < sigma_K < coupling_upper,
        ),
        ConditionResult(
            name="feedback_gain",
            number=29,
            description="0 < c < 1/sqrt(eta * sigma_max(P^T P)), P = I - K L_bar",
            value=float(gains.c),
            lower=0.0,
            upper=feedback_upper,
            passed=0.0 < gains.c < feedback_upper,
        ),
        ConditionResult(
            name="learning_rate",
            number=30,
            description="0 < alpha < 1/phi_max^2",
            value=float(tuning.alpha),
            lower=0.0,
            upper=learning_upper,
            passed=0.0 < tuning.alpha < learning_upper,
        ),
        ConditionResult(
            name="observer_gain",
            number=31,
            description="sigma_max(G) < 1/sqrt(eta)",
            value=sigma_G,
            lower=None,
            upper=observer_upper,
            passed=sigma_G < observer_upper,
        ),
    ]
    report = GainReport(
        conditions=conditions, eta=eta, sigma_max_K=sigma_K, sigma_max_P=sigma_P, sigma_max_G=sigma_G
    )
    logger.debug("gain report: %s", report.as_dict())
    return report
