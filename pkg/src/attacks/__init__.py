"""False data injection channels."""

from typing import Dict, Type

from .actuator import ActuatorAttack, apply_actuator
from .base import ATTACK_KINDS, AttackChannel, AttackSpec
from .channels import AttackInjections, ChannelView, StepInjections, actuate, sense
from .neighbour import NeighbourAttack, apply_neighbour
from .sensor import SensorAttack, apply_sensor

ATTACK_CLASSES: Dict[str, Type[AttackChannel]] = {
    "actuator": ActuatorAttack,
    "sensor": SensorAttack,
    "neighbour": NeighbourAttack,
}


def create_attack(spec: AttackSpec) -> AttackChannel:
    """Instantiate the channel class for an attack declaration."""
    return ATTACK_CLASSES[spec.kind](spec)


__all__ = [
    "ATTACK_KINDS",
    "ActuatorAttack",
    "AttackChannel",
    "AttackInjections",
    "AttackSpec",
    "ChannelView",
    "NeighbourAttack",
    "SensorAttack",
    "StepInjections",
    "actuate",
    "apply_actuator",
    "apply_neighbour",
    "apply_sensor",
    "create_attack",
    "sense",
]
