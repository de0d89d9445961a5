"""Chart series and summary statistics derived from iteration logs.

Absent values (no score presented, no interaction) stay ``None`` all the
way through; they are never conflated with 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .state import IterationLog


def _mean_exact(values: Sequence[float]) -> float:
    """Mean that returns the common value bit-exactly when all inputs are
    equal; summation noise would otherwise break fixed-point scenarios."""
    first = values[0]
    for v in values:
        if v != first:
            return math.fsum(values) / len(values)
    return first


@dataclass(frozen=True, slots=True)
class ResultsPoint:
    real_qos: float
    mean_normal_reputation: float | None


@dataclass(frozen=True, slots=True)
class AccuracyPoint:
    active: int
    interactions: int
    fraction: float | None


@dataclass(frozen=True, slots=True)
class SatisfactionPoint:
    mean_satisfaction: float | None
    mean_satisfaction_normal_users: float | None


def results_series(logs: Sequence[IterationLog]) -> list[ResultsPoint]:
    """Per iteration: the monitored party's real quality next to the mean
    score actually presented by honest providers, absent when no honest
    provider presented one."""
    out = []
    for log in logs:
        qos = _mean_exact(list(log.real_qos.values()))
        scores = [
            r.presented
            for r in log.requests
            if r.provider_normal and r.relying_party.ordinal == log.monitored
        ]
        out.append(ResultsPoint(qos, _mean_exact(scores) if scores else None))
    return out


def accuracy_series(logs: Sequence[IterationLog]) -> list[AccuracyPoint]:
    """Per iteration: how many users asked, how many went on to interact,
    and the resulting fraction (absent when nobody asked)."""
    out = []
    for log in logs:
        active = len(log.requests)
        interactions = sum(1 for r in log.requests if r.interacted)
        fraction = interactions / active if active else None
        out.append(AccuracyPoint(active, interactions, fraction))
    return out


def satisfaction_series(logs: Sequence[IterationLog]) -> list[SatisfactionPoint]:
    """Per iteration: mean satisfaction (1 - |presented - feedback|) over
    interacting users, with an honest-users-only variant."""
    out = []
    for log in logs:
        sats = [r.satisfaction for r in log.requests if r.interacted]
        normal = [
            r.satisfaction for r in log.requests if r.interacted and r.user_normal
        ]
        out.append(
            SatisfactionPoint(
                _mean_exact(sats) if sats else None,
                _mean_exact(normal) if normal else None,
            )
        )
    return out


@dataclass(frozen=True, slots=True)
class SummaryStats:
    """Post-warmup means; any field is ``None`` when its series is
    entirely absent after the warmup."""

    post_warmup_mae: float | None
    mean_satisfaction: float | None
    mean_interaction_rate: float | None
    warmup: int


@dataclass(frozen=True)
class SimulationResult:
    """Everything a finished run yields: the raw logs, the three derived
    series, and the post-warmup summary, fingerprinted for provenance."""

    fingerprint: str
    seed: int
    logs: tuple[IterationLog, ...]
    results: tuple[ResultsPoint, ...]
    accuracy: tuple[AccuracyPoint, ...]
    satisfaction: tuple[SatisfactionPoint, ...]
    summary: SummaryStats

    @property
    def iterations(self) -> int:
        return len(self.logs)


def _mean_present(values: list[float]) -> float | None:
    return _mean_exact(values) if values else None


def summarize(result: SimulationResult, warmup: int) -> SummaryStats:
    """Post-warmup summary over iterations >= warmup, skipping absent
    entries rather than counting them as zero."""
    n = result.iterations
    if not 0 <= warmup < n:
        raise ValueError(f"warmup must lie in [0, {n}), got {warmup}")
    errors = [
        abs(p.mean_normal_reputation - p.real_qos)
        for p in result.results[warmup:]
        if p.mean_normal_reputation is not None
    ]
    sats = [
        p.mean_satisfaction
        for p in result.satisfaction[warmup:]
        if p.mean_satisfaction is not None
    ]
    fractions = [
        p.fraction for p in result.accuracy[warmup:] if p.fraction is not None
    ]
    return SummaryStats(
        post_warmup_mae=_mean_present(errors),
        mean_satisfaction=_mean_present(sats),
        mean_interaction_rate=_mean_present(fractions),
        warmup=warmup,
    )


def build_result(scenario, seed: int, logs: Sequence[IterationLog]) -> SimulationResult:
    """Assemble a SimulationResult from raw logs."""
    partial = SimulationResult(
        fingerprint=scenario.fingerprint(seed),
        seed=seed,
        logs=tuple(logs),
        results=tuple(results_series(logs)),
        accuracy=tuple(accuracy_series(logs)),
        satisfaction=tuple(satisfaction_series(logs)),
        summary=SummaryStats(None, None, None, 0),
    )
    if not logs:
        return partial
    summary = summarize(partial, scenario.warmup_iterations())
    return SimulationResult(
        fingerprint=partial.fingerprint,
        seed=partial.seed,
        logs=partial.logs,
        results=partial.results,
        accuracy=partial.accuracy,
        satisfaction=partial.satisfaction,
        summary=summary,
    )
