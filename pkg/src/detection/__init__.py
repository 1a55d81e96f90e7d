"""Observer, residual threshold, detection and detectability analysis."""

from .bounds import (
    BoundSet,
    bounds_to_dict,
    complete_bounds,
    compute_e_M,
    compute_lambdas,
    compute_rhos,
    compute_threshold_pi,
    compute_weight_bound,
    compute_xi,
    load_bounds,
    save_bounds,
)
from .detectability import (
    DetectabilityProfile,
    attack_effect_s,
    attack_effects,
    detectability_check,
    detectability_profile,
)
from .detector import AlarmInterval, DetectionReport, annotate_latencies, detect
from .observer import ObserverState, observer_step, residual_norms

__all__ = [
    "AlarmInterval",
    "BoundSet",
    "DetectabilityProfile",
    "DetectionReport",
    "ObserverState",
    "annotate_latencies",
    "attack_effect_s",
    "attack_effects",
    "bounds_to_dict",
    "complete_bounds",
    "compute_e_M",
    "compute_lambdas",
    "compute_rhos",
    "compute_threshold_pi",
    "compute_weight_bound",
    "compute_xi",
    "detect",
    "detectability_check",
    "detectability_profile",
    "load_bounds",
    "observer_step",
    "residual_norms",
    "save_bounds",
]
