"""Exception hierarchy shared by every subpackage."""

from typing import Optional


class FormationError(Exception):
    """Base class for all errors raised by the simulator and detector."""


class ConfigurationError(FormationError):
    """Invalid scenario, graph, gain or bound values."""


class ScenarioParseError(ConfigurationError):
    """A scenario file could not be parsed or failed strict validation."""

    def __init__(self, message: str, key: Optional[str] = None):
        """Initialize the error.

        Args:
            message: Human readable description
            key: Dotted key path of the offending entry, if known
        """
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class GraphConstructionError(ConfigurationError):
    """The communication graph violates a construction requirement."""


class GainConditionError(ConfigurationError):
    """One or more closed-loop gain conditions are violated."""

    def __init__(self, report):
        self.report = report
        failed = "; ".join(c.label for c in report.failed)
        super().__init__(f"gain conditions violated: {failed}")


class DimensionError(FormationError, ValueError):
    """Array shapes are inconsistent."""


class NonFiniteError(FormationError, ValueError):
    """An input contains NaN or infinite entries."""


class DivergenceError(FormationError):
    """The closed loop produced a non-finite or runaway state."""

    def __init__(self, step: int, agent: int, value: float):
        self.step = step
        self.agent = agent
        self.value = value
        super().__init__(
            f"state diverged at step {step} (agent {agent + 1}, |x|_inf = {value:.6g})"
        )


class AttackRefusalError(FormationError):
    """The requested operation is refused because attacks are declared."""
