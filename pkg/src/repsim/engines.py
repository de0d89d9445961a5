"""Interchangeable reputation aggregation engines, the declarative rule
filter applied to gathered recommendation sets, and the accuracy-driven
source weight update. All operations are pure functions."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from . import kernels
from .model import InvariantViolation, RecommendationRecord, _check_unit


@dataclass(frozen=True, slots=True)
class WeightedInput:
    """A recommendation paired with the credibility weight of its source
    and its preference similarity to the requesting user."""

    record: RecommendationRecord
    weight: float
    similarity: float

    def __post_init__(self) -> None:
        _check_unit("input weight", self.weight)
        _check_unit("input similarity", self.similarity)


@dataclass(frozen=True, slots=True)
class CapCount:
    """Keep only the ``count`` most recent inputs."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise InvariantViolation(f"cap count must be >= 1, got {self.count}")


@dataclass(frozen=True, slots=True)
class MinSourceWeight:
    """Drop inputs whose source weight is below ``threshold``."""

    threshold: float

    def __post_init__(self) -> None:
        _check_unit("weight threshold", self.threshold)


@dataclass(frozen=True, slots=True)
class MaxAge:
    """Drop inputs older than ``age`` iterations."""

    age: int

    def __post_init__(self) -> None:
        if self.age < 0:
            raise InvariantViolation(f"max age must be >= 0, got {self.age}")


@dataclass(frozen=True, slots=True)
class OverloadCap:
    """If more than ``trigger`` inputs reach this rule, keep only the
    ``cap`` most recent."""

    trigger: int
    cap: int

    def __post_init__(self) -> None:
        if self.trigger < 1 or self.cap < 1:
            raise InvariantViolation("overload trigger and cap must be >= 1")
        if self.cap > self.trigger:
            raise InvariantViolation(
                f"overload cap {self.cap} must not exceed trigger {self.trigger}"
            )


Rule = Union[CapCount, MinSourceWeight, MaxAge, OverloadCap]


class EngineKind(Enum):
    WEIGHTED_MEAN = "weighted_mean"
    TIME_DECAY_WEIGHTED_MEAN = "time_decay_weighted_mean"


@dataclass(frozen=True)
class EngineConfig:
    """Which aggregation engine a run uses, plus the shared scoring knobs:
    the no-information default score and the weight-update learning rate."""

    kind: EngineKind = EngineKind.WEIGHTED_MEAN
    decay: float | None = None
    default_score: float = 0.5
    learning_rate: float = 0.2

    def __post_init__(self) -> None:
        _check_unit("default score", self.default_score)
        _check_unit("learning rate", self.learning_rate)
        if self.kind is EngineKind.TIME_DECAY_WEIGHTED_MEAN:
            if self.decay is None or not 0.0 < self.decay <= 1.0:
                raise InvariantViolation(
                    f"time decay engine needs decay in (0, 1], got {self.decay!r}"
                )
        elif self.decay is not None and not 0.0 < self.decay <= 1.0:
            raise InvariantViolation(f"decay must lie in (0, 1], got {self.decay!r}")

    def code(self) -> int:
        if self.kind is EngineKind.TIME_DECAY_WEIGHTED_MEAN:
            return kernels.ENGINE_TIME_DECAY
        return kernels.ENGINE_WEIGHTED_MEAN


_RULE_CODES = {
    CapCount: kernels.RULE_CAP_COUNT,
    MinSourceWeight: kernels.RULE_MIN_SOURCE_WEIGHT,
    MaxAge: kernels.RULE_MAX_AGE,
    OverloadCap: kernels.RULE_OVERLOAD_CAP,
}


def encode_rules(rules: Sequence[Rule]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pack a rule list into the flat arrays the kernels consume."""
    codes = np.empty(len(rules), dtype=np.int64)
    p1 = np.zeros(len(rules), dtype=np.float64)
    p2 = np.zeros(len(rules), dtype=np.float64)
    for j, rule in enumerate(rules):
        codes[j] = _RULE_CODES[type(rule)]
        if isinstance(rule, CapCount):
            p1[j] = rule.count
        elif isinstance(rule, MinSourceWeight):
            p1[j] = rule.threshold
        elif isinstance(rule, MaxAge):
            p1[j] = rule.age
        else:
            p1[j] = rule.trigger
            p2[j] = rule.cap
    return codes, p1, p2


def _canonical_order(inputs: Sequence[WeightedInput]) -> list[int]:
    # Recency ties break on the source id so capping is deterministic.
    return sorted(
        range(len(inputs)),
        key=lambda i: (inputs[i].record.iteration, inputs[i].record.source.sort_key()),
    )


def apply_rules(
    rules: Sequence[Rule], inputs: Sequence[WeightedInput], now: int
) -> list[WeightedInput]:
    """Apply rules in declaration order; each rule only removes inputs.
    Survivors come back in their original relative order."""
    if not rules or not inputs:
        return list(inputs)
    order = _canonical_order(inputs)
    iters = np.array([inputs[i].record.iteration for i in order], dtype=np.int64)
    weights = np.array([inputs[i].weight for i in order], dtype=np.float64)
    codes, p1, p2 = encode_rules(rules)
    mask = kernels.rule_mask(iters, weights, now, codes, p1, p2)
    kept = {order[pos] for pos in range(len(order)) if mask[pos]}
    return [inp for i, inp in enumerate(inputs) if i in kept]


def _columns(
    inputs: Sequence[WeightedInput],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    values = np.array([inp.record.value for inp in inputs], dtype=np.float64)
    weights = np.array([inp.weight for inp in inputs], dtype=np.float64)
    sims = np.array([inp.similarity for inp in inputs], dtype=np.float64)
    iters = np.array([inp.record.iteration for inp in inputs], dtype=np.int64)
    return values, weights, sims, iters


def weighted_mean(inputs: Sequence[WeightedInput], default: float = 0.5) -> float:
    """Similarity-and-weight scaled mean of the input values. Returns
    ``default`` when the combined weight mass is zero (including when
    the input list is empty)."""
    _check_unit("default score", default)
    if not inputs:
        return default
    values, weights, sims, iters = _columns(inputs)
    mask = np.ones(len(inputs), dtype=np.bool_)
    return float(
        kernels.engine_score(
            values, weights, sims, iters, mask,
            kernels.ENGINE_WEIGHTED_MEAN, 1.0, 0, default,
        )
    )


def time_decay_mean(
    inputs: Sequence[WeightedInput], decay: float, now: int, default: float = 0.5
) -> float:
    """Weighted mean with each effective weight scaled by
    ``decay ** (now - iteration)``, so stale recommendations fade."""
    _check_unit("default score", default)
    if not 0.0 < decay <= 1.0:
        raise InvariantViolation(f"decay must lie in (0, 1], got {decay!r}")
    for inp in inputs:
        if inp.record.iteration > now:
            raise InvariantViolation(
                f"input from iteration {inp.record.iteration} is newer than now={now}"
            )
    if not inputs:
        return default
    values, weights, sims, iters = _columns(inputs)
    mask = np.ones(len(inputs), dtype=np.bool_)
    return float(
        kernels.engine_score(
            values, weights, sims, iters, mask,
            kernels.ENGINE_TIME_DECAY, decay, now, default,
        )
    )


def engine_score(
    config: EngineConfig, inputs: Sequence[WeightedInput], now: int
) -> float:
    """Run the configured engine over an input list."""
    if config.kind is EngineKind.TIME_DECAY_WEIGHTED_MEAN:
        return time_decay_mean(inputs, config.decay, now, config.default_score)
    return weighted_mean(inputs, config.default_score)


def adjust_weight(
    weight: float, recommendation: float, feedback: float, learning_rate: float
) -> float:
    """Move a source weight toward the source's observed accuracy,
    ``1 - |recommendation - feedback|``, by an exponential moving average."""
    _check_unit("weight", weight)
    _check_unit("recommendation", recommendation)
    _check_unit("feedback", feedback)
    _check_unit("learning rate", learning_rate)
    accuracy = 1.0 - abs(recommendation - feedback)
    updated = (1.0 - learning_rate) * weight + learning_rate * accuracy
    return 0.0 if updated < 0.0 else (1.0 if updated > 1.0 else updated)
