"""Agent dynamics registry."""

from typing import Any, Dict, Optional, Type

from src.errors import ConfigurationError

from .base import AgentDynamics
from .linear import LinearDynamics
from .rational import RationalCouplingDynamics

DYNAMICS_REGISTRY: Dict[str, Type[AgentDynamics]] = {
    RationalCouplingDynamics.NAME: RationalCouplingDynamics,
    LinearDynamics.NAME: LinearDynamics,
}


def create_dynamics(
    name: str, state_dim: int, params: Optional[Dict[str, Any]] = None
) -> AgentDynamics:
    """Create a registered dynamics model.

    Args:
        name: Registered model name
        state_dim: Agent state dimension n
        params: Model specific keyword parameters

    Returns:
        Dynamics instance; calling it evaluates x+ = f(x) + u + w

    Raises:
        ConfigurationError: If the name is not registered or params are invalid
    """
    if name not in DYNAMICS_REGISTRY:
        raise ConfigurationError(
            f"unknown dynamics {name!r}, registered: {', '.join(sorted(DYNAMICS_REGISTRY))}"
        )
    try:
        return DYNAMICS_REGISTRY[name](state_dim, **(params or {}))
    except TypeError as exc:
        raise ConfigurationError(f"invalid parameters for dynamics {name!r}: {exc}") from exc


__all__ = [
    "AgentDynamics",
    "DYNAMICS_REGISTRY",
    "LinearDynamics",
    "RationalCouplingDynamics",
    "create_dynamics",
]
