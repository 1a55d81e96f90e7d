"""Formation errors, control law and gain condition checks."""

from .conditions import (
    ConditionResult,
    GainReport,
    compute_eta,
    feedback_matrix,
    sigma_max,
    validate_gains,
)
from .formation import (
    CONTROL_LAWS,
    ControlGains,
    FormationSpec,
    control_inputs,
    control_law,
    formation_errors,
    global_error,
    local_error,
    tracking_error,
)

__all__ = [
    "CONTROL_LAWS",
    "ConditionResult",
    "ControlGains",
    "FormationSpec",
    "GainReport",
    "compute_eta",
    "control_inputs",
    "control_law",
    "feedback_matrix",
    "formation_errors",
    "global_error",
    "local_error",
    "sigma_max",
    "tracking_error",
    "validate_gains",
]
