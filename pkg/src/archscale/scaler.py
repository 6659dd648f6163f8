"""Adaptation policies: architecture-level (global) and per-service (local).

Both share the same trigger: scale up when the measured inbound rate plus a
safety margin K exceeds the currently guaranteed capacity by more than the
hysteresis band k, scale down in the symmetric case.

The global policy re-derives the whole target configuration from the scale
ladder; the resulting delta vector always has the shape "base, or base plus
n copies of the largest scale plus at most one further scale", so repeated
stacking only ever happens with the largest (balanced) scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .capacity import (
    CapacityTable,
    Configuration,
    ScaleLadder,
    ceil_frac,
    is_infinite,
    system_mcl,
)
from .model import Rational


@dataclass(frozen=True)
class ScalerParams:
    """K: safety margin (emails/s); k: hysteresis band; period in ticks."""

    K: Fraction = Fraction(20)
    k: Fraction = Fraction(10)
    monitoring_period: int = 300

    def __post_init__(self):
        if self.K < 0 or self.k < 0 or self.monitoring_period < 1:
            raise ValueError("require K >= 0, k >= 0, monitoring_period >= 1")


class Trigger(Enum):
    UP = "up"
    DOWN = "down"
    NONE = "none"


def scaling_trigger(inbound: Rational, total_mcl: Rational, params: ScalerParams) -> Trigger:
    if inbound < 0:
        raise ValueError("inbound rate must be >= 0")
    demand = Fraction(inbound) + params.K
    if is_infinite(total_mcl):
        return Trigger.NONE
    gap = demand - Fraction(total_mcl)
    if gap > params.k:
        return Trigger.UP
    if -gap > params.k:
        return Trigger.DOWN
    return Trigger.NONE


DeltaVector = tuple[int, ...]


def delta_vector_is_canonical(vector: DeltaVector) -> bool:
    """True iff the vector is n * (all scales) + a prefix of scales.

    Equivalently: entries are non-increasing by index and span at most 1.
    """
    if not vector:
        return True
    if any(v < 0 for v in vector):
        return False
    if any(a < b for a, b in zip(vector, vector[1:])):
        return False
    return vector[0] - vector[-1] <= 1


def select_global_configuration(
    inbound: Rational,
    params: ScalerParams,
    ladder: ScaleLadder,
    table: CapacityTable,
) -> tuple[Configuration, DeltaVector, Rational]:
    """Pick the smallest reachable configuration covering inbound + K.

    Starting from the base, repeatedly add the first scale whose addition
    satisfies the demand; if none does, add the largest scale and retry.
    Termination holds because the largest scale grows every finite-capacity
    service, so capacity strictly increases each round.
    """
    demand = Fraction(inbound) + params.K
    num = ladder.num_scales
    deltas = [0] * num
    config = ladder.base
    mcl = system_mcl(config, table)
    found = is_infinite(mcl) or Fraction(mcl) - demand >= 0
    scales = [ladder.scale(i) for i in range(1, num + 1)]
    while not found:
        i = -1
        while i < num - 1 and not found:
            i += 1
            candidate = config + scales[i]
            mcl = system_mcl(candidate, table)
            found = is_infinite(mcl) or Fraction(mcl) - demand >= 0
        config = candidate
        for j in range(i + 1):
            deltas[j] += 1
    return config, tuple(deltas), mcl


@dataclass(frozen=True)
class ReconfigurationStep:
    delta_index: int  # 0-based
    deploy: bool  # False = undeploy


@dataclass(frozen=True)
class ReconfigurationPlan:
    steps: tuple[ReconfigurationStep, ...]

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def diff_reconfiguration(deployed: DeltaVector, target: DeltaVector) -> ReconfigurationPlan:
    """Per-index deploy/undeploy steps turning ``deployed`` into ``target``."""
    if len(deployed) != len(target):
        raise ValueError("delta vectors must have equal length")
    steps: list[ReconfigurationStep] = []
    for i, (have, want) in enumerate(zip(deployed, target)):
        diff = want - have
        for _ in range(abs(diff)):
            steps.append(ReconfigurationStep(i, deploy=diff > 0))
    return ReconfigurationPlan(tuple(steps))


def local_target_instances(
    inbound: Rational,
    params: ScalerParams,
    mcl: Rational,
    base_n: int,
    deployed: int,
) -> int:
    """Per-service replica target: demand ceiling, never below the base count."""
    if is_infinite(mcl) or Fraction(mcl) <= 0:
        raise ValueError("local scaling needs a finite positive mcl")
    if deployed < 0 or base_n < 0:
        raise ValueError("instance counts must be >= 0")
    target = ceil_frac((Fraction(inbound) + params.K) / Fraction(mcl))
    return max(base_n, target)
