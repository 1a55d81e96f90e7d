"""Bound constants and the closed-form threshold formulas.

Every quantity here is a scalar. The inputs (w_M, eps_M, W_M, phi_M, F_M,
d_M) come from calibration or a bound file; the rest are derived from them,
the gains and the graph spectrum.
"""

import logging
import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

import tomli_w

from src.control.conditions import compute_eta, feedback_matrix, sigma_max
from src.control.formation import ControlGains
from src.errors import ConfigurationError, ScenarioParseError
from src.network.rbf import TuningParams
from src.topology.graph import LaplacianBundle

logger = logging.getLogger(__name__)

BOUND_FILE_VERSION = 1


@dataclass(frozen=True)
class BoundSet:
    """Scalar bound constants feeding the threshold formulas.

    Measured inputs:
        w_M: disturbance bound
        eps_M: network approximation bound
        W_M: ideal weight bound
        phi_M: activation norm bound
        F_M: leader dynamics bound
        d_M: stacked formation offset bound

    Derived values are ``None`` until ``complete_bounds`` fills them in.
    """

    w_M: float
    eps_M: float
    W_M: float
    phi_M: float
    F_M: float
    d_M: float
    e_M: Optional[float] = None
    e_M_source: str = "theory"
    eta: Optional[float] = None
    sigma_max_Lbar: Optional[float] = None
    sigma_min_LB: Optional[float] = None
    sigma_max_P: Optional[float] = None
    sigma_max_G: Optional[float] = None
    Lambda1: Optional[float] = None
    Lambda2: Optional[float] = None
    xi: Optional[float] = None
    W_tilde_bound: Optional[float] = None
    rho1: Optional[float] = None
    rho2: Optional[float] = None
    pi: Optional[float] = None
    safety_factor: float = 1.0
    observed_residual_max: Optional[float] = None

    def __post_init__(self):
        for name in ("w_M", "eps_M", "W_M", "phi_M", "F_M", "d_M"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ConfigurationError(f"bound {name} must be finite and nonnegative, got {value}")

    @property
    def mu_M(self) -> float:
        return self.eps_M + self.w_M

    @property
    def nu_M(self) -> float:
        return self.F_M + self.d_M


def _slack(tuning: TuningParams, phi_max: float) -> float:
    if tuning.alpha <= 0.0:
        raise ConfigurationError("learning_rate condition violated: alpha must be positive")
    slack = 1.0 - tuning.alpha * phi_max**2
    if slack <= 0.0:
        raise ConfigurationError("learning_rate condition violated: alpha * phi_M^2 >= 1")
    return slack


def formation_denominator(gains: ControlGains, bundle: LaplacianBundle, eta: float) -> float:
    """1 - eta c^2 sigma_max(P^T P)."""
    return 1.0 - eta * gains.c**2 * sigma_max(feedback_matrix(gains, bundle)) ** 2


def observer_denominator(gains: ControlGains, eta: float) -> float:
    """1 - eta sigma_max(G)^2."""
    return 1.0 - eta * float(abs(gains.observer_gain).max()) ** 2


def compute_lambdas(
    b: BoundSet, bundle: LaplacianBundle, gains: ControlGains, tuning: TuningParams
) -> tuple[float, float]:
    """Linear and constant coefficients of the formation error bound."""
    alpha, gamma = tuning.alpha, tuning.gamma
    slack = _slack(tuning, b.phi_M)
    mu, nu, W = b.mu_M, b.nu_M, b.W_M
    sigma_L = bundle.sigma_max_Lbar
    sigma_P = sigma_max(feedback_matrix(gains, bundle))

    lambda1 = (
        gains.c * sigma_P * sigma_L / sigma_L**2
        * ((gamma + 1.0) / slack * mu + (2.0 - alpha) / slack * nu)
    )
    lambda2 = (
        2.0 * gamma * W * mu
        + (1.0 / alpha) * (gamma / (2.0 - gamma)) * W**2
        + (-2.0 * gamma + (1.0 + gamma) ** 2 / slack) * mu**2
        + 2.0 * (1.0 + gamma) / slack * mu * nu
        + (2.0 - alpha) / slack * nu**2
    )
    return lambda1, lambda2


def compute_e_M(
    b: BoundSet, bundle: LaplacianBundle, gains: ControlGains, tuning: TuningParams
) -> float:
    """Ultimate bound on the stacked formation error.

    Raises:
        ConfigurationError: If 1 - eta c^2 sigma_max(P^T P) <= 0 (feedback_gain
            condition) or the discriminant is negative
    """
    eta = compute_eta(tuning.alpha, b.phi_M)
    denominator = formation_denominator(gains, bundle, eta) if math.isfinite(eta) else -math.inf
    if denominator <= 0.0:
        raise ConfigurationError(
            "feedback_gain condition violated: 1 - eta c^2 sigma_max(P^T P) is not positive"
        )
    lambda1, lambda2 = compute_lambdas(b, bundle, gains, tuning)
    discriminant = lambda1**2 + denominator * lambda2
    if discriminant < 0.0:
        raise ConfigurationError(f"formation error bound has negative discriminant {discriminant:.6g}")
    return (lambda1 + math.sqrt(discriminant)) / denominator


def compute_xi(
    b: BoundSet, bundle: LaplacianBundle, gains: ControlGains, tuning: TuningParams
) -> float:
    """Constant term of the weight estimation error bound."""
    alpha, gamma = tuning.alpha, tuning.gamma
    slack = _slack(tuning, b.phi_M)
    mu, nu, W = b.mu_M, b.nu_M, b.W_M
    eta = compute_eta(alpha, b.phi_M)
    denominator = formation_denominator(gains, bundle, eta)
    if denominator <= 0.0:
        raise ConfigurationError(
            "feedback_gain condition violated: 1 - eta c^2 sigma_max(P^T P) is not positive"
        )
    lambda1, _ = compute_lambdas(b, bundle, gains, tuning)
    return (
        2.0 * alpha * gamma * W * mu
        + gamma**2 * W**2
        + (-2.0 * alpha * gamma + alpha * (1.0 + gamma) ** 2 / slack) * mu**2
        + 2.0 * alpha * (1.0 + gamma) / slack * mu * nu
        + alpha * (2.0 - alpha) / slack * nu**2
        + bundle.sigma_max_Lbar**2 / denominator * lambda1**2
    )


def compute_weight_bound(W_M: float, xi: float, tuning: TuningParams) -> float:
    """Ultimate bound on ||W_tilde||_F."""
    gamma = tuning.gamma
    discriminant = gamma**2 * (1.0 - gamma) ** 2 * W_M**2 + gamma * (2.0 - gamma) * xi
    if discriminant < 0.0:
        raise ConfigurationError(f"weight error bound has negative discriminant {discriminant:.6g}")
    return (gamma * (1.0 - gamma) * W_M + math.sqrt(discriminant)) / (gamma * (2.0 - gamma))


def compute_rhos(b: BoundSet, gains: ControlGains, tuning: TuningParams) -> tuple[float, float]:
    """Linear and constant coefficients of the residual bound."""
    if b.e_M is None:
        raise ConfigurationError("e_M must be known before the residual threshold")
    gamma, alpha = tuning.gamma, tuning.alpha
    slack = _slack(tuning, b.phi_M)
    eta = compute_eta(alpha, b.phi_M)
    sigma_G = float(abs(gains.observer_gain).max())
    mu, W, e_M = b.mu_M, b.W_M, b.e_M

    rho1 = (gamma + 1.0) / slack * sigma_G * mu + eta * sigma_G * e_M
    rho2 = (
        2.0 * gamma * mu * W
        + (1.0 / alpha) * (gamma / (2.0 - gamma)) * W**2
        + (-2.0 * gamma + (1.0 + gamma) ** 2 / slack) * mu**2
        + 2.0 * mu * (gamma + 1.0) / slack * e_M
        + eta * e_M**2
    )
    return rho1, rho2


def compute_threshold_pi(b: BoundSet, gains: ControlGains, tuning: TuningParams) -> float:
    """Residual threshold pi.

    Raises:
        ConfigurationError: If 1 - eta sigma_max(G)^2 <= 0 (observer_gain
            condition) or the discriminant is negative
    """
    eta = compute_eta(tuning.alpha, b.phi_M)
    denominator = observer_denominator(gains, eta) if math.isfinite(eta) else -math.inf
    if denominator <= 0.0:
        raise ConfigurationError("observer_gain condition violated: 1 - eta sigma_max(G)^2 is not positive")
    rho1, rho2 = compute_rhos(b, gains, tuning)
    discriminant = rho1**2 + denominator * rho2
    if discriminant < 0.0:
        raise ConfigurationError(f"residual threshold has negative discriminant {discriminant:.6g}")
    return (rho1 + math.sqrt(discriminant)) / denominator


def complete_bounds(
    b: BoundSet,
    bundle: LaplacianBundle,
    gains: ControlGains,
    tuning: TuningParams,
    e_M_fallback: Optional[float] = None,
) -> BoundSet:
    """Fill in every derived field of a bound set.

    The formation error bound comes from the closed-form expression when it is
    defined. Otherwise ``e_M_fallback`` is used (when given) and the weight
    error bound is left empty.

    Args:
        b: Bound set with at least the measured inputs
        bundle: Laplacian bundle
        gains: Controller and observer gains
        tuning: Tuning parameters
        e_M_fallback: Empirical formation error bound

    Returns:
        Completed bound set

    Raises:
        ConfigurationError: If e_M is undefined and no fallback is given, or
            the threshold itself is undefined
    """
    eta = compute_eta(tuning.alpha, b.phi_M)
    lambda1, lambda2 = compute_lambdas(b, bundle, gains, tuning)
    values: Dict[str, Any] = {
        "eta": eta,
        "sigma_max_Lbar": bundle.sigma_max_Lbar,
        "sigma_min_LB": bundle.sigma_min_LB,
        "sigma_max_P": sigma_max(feedback_matrix(gains, bundle)),
        "sigma_max_G": float(abs(gains.observer_gain).max()),
        "Lambda1": lambda1,
        "Lambda2": lambda2,
    }
    try:
        values["e_M"] = compute_e_M(b, bundle, gains, tuning)
        values["e_M_source"] = "theory"
        values["xi"] = compute_xi(b, bundle, gains, tuning)
        values["W_tilde_bound"] = compute_weight_bound(b.W_M, values["xi"], tuning)
    except ConfigurationError as exc:
        if e_M_fallback is None:
            raise
        logger.warning("closed-form e_M unavailable (%s); using empirical bound %.6g", exc, e_M_fallback)
        values.update(e_M=float(e_M_fallback), e_M_source="empirical", xi=None, W_tilde_bound=None)

    completed = replace(b, **values)
    rho1, rho2 = compute_rhos(completed, gains, tuning)
    pi = compute_threshold_pi(completed, gains, tuning)
    return replace(completed, rho1=rho1, rho2=rho2, pi=pi)


def bounds_to_dict(b: BoundSet) -> Dict[str, Any]:
    """Flat mapping with unset values dropped."""
    data: Dict[str, Any] = {"bound_file_version": BOUND_FILE_VERSION}
    data.update({k: v for k, v in asdict(b).items() if v is not None})
    data["mu_M"] = b.mu_M
    data["nu_M"] = b.nu_M
    return data


def save_bounds(b: BoundSet, path: Path) -> Path:
    """Write a bound set as a flat TOML key-value file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        tomli_w.dump(bounds_to_dict(b), f)
    logger.info("bound set written to %s", path)
    return path


def load_bounds(path: Path) -> BoundSet:
    """Read a bound set written by ``save_bounds``.

    Raises:
        ScenarioParseError: On unreadable files, unknown keys or missing inputs
    """
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ScenarioParseError(f"cannot read bound file: {exc}", key=str(path)) from exc

    version = data.pop("bound_file_version", BOUND_FILE_VERSION)
    if version != BOUND_FILE_VERSION:
        raise ScenarioParseError(f"unsupported version {version}", key="bound_file_version")
    # derived aggregates are recomputed from their parts
    data.pop("mu_M", None)
    data.pop("nu_M", None)
    known = {f.name for f in fields(BoundSet)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ScenarioParseError(f"unknown keys {unknown}", key=str(path))
    try:
        return BoundSet(**data)
    except TypeError as exc:
        raise ScenarioParseError(f"incomplete bound file: {exc}", key=str(path)) from exc
