"""Sufficient condition for an attack to push a residual over the threshold.

The residual of agent i obeys x_tilde(k) = sum_l G^(k-l-1) (s(l) + r(l)) from
x_tilde(0) = 0, where s is the attack effect and r the attack-free driving
term. The attack is guaranteed visible at step k when the accumulated attack
effect outweighs the threshold plus the accumulated nuisance.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.attacks.channels import StepInjections
from src.control.formation import ControlGains
from src.errors import DimensionError
from src.network.rbf import RbfBasis, estimate
from src.topology.graph import DirectedWeightedGraph


def _apply(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    return G * v if G.ndim == 1 else G @ v


def _accumulate(sequence: np.ndarray, G: np.ndarray) -> np.ndarray:
    """All partial sums sum_{l<k} G^(k-l-1) v(l) for k = 1..K, by Horner's rule."""
    partial = np.zeros_like(sequence)
    acc = np.zeros(sequence.shape[1:])
    for index, value in enumerate(sequence):
        acc = _apply(G, acc) + value
        partial[index] = acc
    return partial


def _as_sequences(s_seq, G, nuisance_seq) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    s_seq = np.atleast_2d(np.asarray(s_seq, dtype=float))
    nuisance_seq = np.atleast_2d(np.asarray(nuisance_seq, dtype=float))
    G = np.asarray(G, dtype=float)
    if s_seq.shape != nuisance_seq.shape:
        raise DimensionError(f"attack effect {s_seq.shape} and nuisance {nuisance_seq.shape} differ")
    if G.shape not in ((s_seq.shape[1],), (s_seq.shape[1], s_seq.shape[1])):
        raise DimensionError(f"G has shape {G.shape}, expected diagonal or matrix of size {s_seq.shape[1]}")
    return s_seq, G, nuisance_seq


def detectability_check(s_seq, G, nuisance_seq, pi: float, k: int) -> Tuple[bool, float]:
    """Evaluate the detectability inequality at step k.

    Args:
        s_seq: Attack effects s(l), shape (K, n) with K >= k
        G: Observer gain, diagonal entries (n,) or full (n, n) matrix
        nuisance_seq: Attack-free driving terms, shape (K, n)
        pi: Residual threshold
        k: Number of accumulated steps

    Returns:
        (detectable, margin) with margin = ||S_k|| - pi - ||R_k|| in the infinity norm
    """
    s_seq, G, nuisance_seq = _as_sequences(s_seq, G, nuisance_seq)
    if not 1 <= k <= len(s_seq):
        raise DimensionError(f"k = {k} outside 1..{len(s_seq)}")
    attack = _accumulate(s_seq[:k], G)[-1]
    nuisance = _accumulate(nuisance_seq[:k], G)[-1]
    margin = float(np.abs(attack).max() - pi - np.abs(nuisance).max())
    return margin >= 0.0, margin


@dataclass(eq=False)
class DetectabilityProfile:
    """Step-wise detectability of one agent.

    Attributes:
        attack_norms: ||S_k||_inf for k = 1..K
        nuisance_norms: ||R_k||_inf for k = 1..K
        margins: attack_norms - pi - nuisance_norms
        threshold: pi
    """

    attack_norms: np.ndarray
    nuisance_norms: np.ndarray
    margins: np.ndarray
    threshold: float

    @property
    def detectable(self) -> np.ndarray:
        return self.margins >= 0.0

    def first_detectable(self, from_index: int = 0, to_index: Optional[int] = None) -> Optional[int]:
        """First detectable entry in [from_index, to_index), or None."""
        hits = np.flatnonzero(self.detectable[from_index:to_index])
        return int(hits[0]) + from_index if hits.size else None


def detectability_profile(s_seq, G, nuisance_seq, pi: float) -> DetectabilityProfile:
    """Detectability margin after every step of the sequences.

    Entry k - 1 of each array corresponds to ``detectability_check(..., k)``.
    """
    s_seq, G, nuisance_seq = _as_sequences(s_seq, G, nuisance_seq)
    attack_norms = np.abs(_accumulate(s_seq, G)).max(axis=1)
    nuisance_norms = np.abs(_accumulate(nuisance_seq, G)).max(axis=1)
    return DetectabilityProfile(attack_norms, nuisance_norms, attack_norms - pi - nuisance_norms, pi)


def attack_effects(
    injections: StepInjections,
    states: np.ndarray,
    weights: np.ndarray,
    basis: RbfBasis,
    g: DirectedWeightedGraph,
    gains: ControlGains,
) -> np.ndarray:
    """Attack effect s_i of every agent at one step.

    s_i is the difference between the attacked and the attack-free residual
    one-step maps evaluated on the same true states and weights:

        s_i = kappa u^a + lambda G x^a + f_hat(x) - f_hat(x + lambda x^a)
              + sum_j a_ij (phi x_bar^a_j - lambda x^a) - b_i lambda x^a

    Args:
        injections: Gated injections of the step
        states: (N, n) true states
        weights: (N, m, n) network weights
        basis: Network basis
        g: Communication graph
        gains: Controller and observer gains

    Returns:
        (N, n) attack effects
    """
    states = np.asarray(states, dtype=float)
    if injections.sensor.shape != states.shape:
        raise DimensionError(f"injections {injections.sensor.shape} do not match states {states.shape}")
    sensor = injections.sensor
    f_true = estimate(basis, weights, states)
    f_sensed = estimate(basis, weights, states + sensor)
    neighbour = np.einsum("ij,ijn->in", g.weights, injections.neighbour)
    pinned_degree = g.weights.sum(axis=1) + g.pin_gains
    return (
        injections.actuator
        + gains.observer_gain * sensor
        + f_true
        - f_sensed
        + neighbour
        - pinned_degree[:, None] * sensor
    )


def attack_effect_s(
    i: int,
    injections: StepInjections,
    states: np.ndarray,
    weights: np.ndarray,
    basis: RbfBasis,
    g: DirectedWeightedGraph,
    gains: ControlGains,
) -> np.ndarray:
    """Attack effect of agent i; see ``attack_effects``."""
    return attack_effects(injections, states, weights, basis, g, gains)[i]
