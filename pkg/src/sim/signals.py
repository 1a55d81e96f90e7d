"""Leader trajectory and disturbance signals."""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.utils.expressions import TimeLike, VectorExpression


def leader_step(t: TimeLike, traj: VectorExpression) -> np.ndarray:
    """Leader state at time t (seconds), or at every time of an array."""
    return traj(t)


class DisturbanceModel:
    """Per-agent additive disturbances; undeclared agents see zero."""

    def __init__(
        self,
        n_agents: int,
        state_dim: int,
        declared: Sequence[Tuple[int, Sequence[str]]] = (),
    ):
        self.n_agents = n_agents
        self.state_dim = state_dim
        self.expressions: List[Optional[VectorExpression]] = [None] * n_agents
        for agent, sources in declared:
            self.expressions[agent] = VectorExpression.parse(sources)

    def __call__(self, i: int, t: float) -> np.ndarray:
        expression = self.expressions[i]
        if expression is None:
            return np.zeros(self.state_dim)
        return expression(t)

    def grid(self, times: np.ndarray) -> np.ndarray:
        """Disturbances of every agent on a time grid, shape (T, N, n)."""
        values = np.zeros((len(times), self.n_agents, self.state_dim))
        for agent, expression in enumerate(self.expressions):
            if expression is not None:
                values[:, agent] = expression(times)
        return values

    def peak_norm(self, times: np.ndarray) -> float:
        """max over agents and times of ||w_i(t)||."""
        if len(times) == 0:
            return 0.0
        return float(np.linalg.norm(self.grid(times), axis=-1).max())


def disturbance_eval(model: DisturbanceModel, i: int, t: float) -> np.ndarray:
    """Disturbance w_i(t)."""
    return model(i, t)
