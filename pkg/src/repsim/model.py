"""Core value types shared by every other module: entity identities,
preference vectors, ground-truth service quality, and recommendation
records. Everything here is an immutable value on the closed unit
interval and safe to share between threads."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, Sequence


class ConfigurationError(Exception):
    """A scenario or request references something that is not defined."""


class InvariantViolation(ValueError):
    """A domain value breaks one of its declared invariants."""


def clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else (1.0 if x > 1.0 else x)


def _check_unit(name: str, x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise InvariantViolation(f"{name} must lie in [0, 1], got {x!r}")
    return float(x)


class EntityKind(IntEnum):
    USER = 0
    PROVIDER = 1
    RELYING_PARTY = 2


_KIND_NAMES = {
    EntityKind.USER: "user",
    EntityKind.PROVIDER: "provider",
    EntityKind.RELYING_PARTY: "rp",
}


@dataclass(frozen=True, slots=True)
class EntityId:
    """Identity of one simulated actor.

    ``incarnation`` starts at 0 and is bumped whenever a Sybil behavior
    replaces the actor's identity, so history can still be attributed to
    the underlying actor while every mapping keyed by the old id becomes
    unreachable.
    """

    kind: EntityKind
    ordinal: int
    incarnation: int = 0

    def __post_init__(self) -> None:
        if self.ordinal < 0 or self.incarnation < 0:
            raise InvariantViolation(
                f"ordinal and incarnation must be non-negative, got "
                f"({self.ordinal}, {self.incarnation})"
            )

    def sort_key(self) -> tuple[int, int, int]:
        return (int(self.kind), self.ordinal, self.incarnation)

    def next_incarnation(self) -> EntityId:
        return EntityId(self.kind, self.ordinal, self.incarnation + 1)

    def __str__(self) -> str:
        tail = f"#{self.incarnation}" if self.incarnation else ""
        return f"{_KIND_NAMES[self.kind]}:{self.ordinal}{tail}"


def validate_prefs(components: Sequence[float], dim: int | None = None) -> tuple[float, ...]:
    """Normalize a preference vector to a tuple, enforcing its invariants."""
    vec = tuple(float(c) for c in components)
    if len(vec) < 1:
        raise InvariantViolation("preference vector needs dimension >= 1")
    if dim is not None and len(vec) != dim:
        raise InvariantViolation(
            f"preference vector has dimension {len(vec)}, expected {dim}"
        )
    for c in vec:
        _check_unit("preference component", c)
    return vec


def neutral_prefs(dim: int) -> tuple[float, ...]:
    """The no-information preference vector: 0.5 in every component."""
    return (0.5,) * dim


def preference_similarity(a: Sequence[float], b: Sequence[float]) -> float:
    """Closeness of two preference vectors: 1 minus the mean absolute
    componentwise difference. Symmetric, in [0, 1], and exactly 1 iff the
    vectors are equal."""
    if len(a) != len(b):
        raise InvariantViolation(
            f"preference dimensions differ: {len(a)} vs {len(b)}"
        )
    d = len(a)
    if d == 0:
        raise InvariantViolation("preference vector needs dimension >= 1")
    total = 0.0
    for x, y in zip(a, b):
        total += abs(x - y)
    return 1.0 - total / d


Schedule = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class QoSProfile:
    """Ground-truth quality of a relying party, per service, as a step
    schedule over iterations. ``noise`` is the half-width of the uniform
    perturbation applied at interaction time, never here."""

    schedules: Mapping[str, Schedule]
    noise: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise <= 0.5:
            raise InvariantViolation(f"noise must lie in [0, 0.5], got {self.noise!r}")
        if not self.schedules:
            raise InvariantViolation("profile declares no services")
        for service, pieces in self.schedules.items():
            if not pieces:
                raise InvariantViolation(f"service {service!r} has an empty schedule")
            if pieces[0][0] != 0:
                raise InvariantViolation(
                    f"service {service!r}: first piece must start at 0"
                )
            prev = -1
            for start, quality in pieces:
                if start <= prev:
                    raise InvariantViolation(
                        f"service {service!r}: piece starts must strictly increase"
                    )
                prev = start
                _check_unit(f"service {service!r} quality", quality)

    def services(self) -> tuple[str, ...]:
        return tuple(self.schedules)


def qos_at(profile: QoSProfile, service: str, t: int) -> float:
    """Quality of ``service`` at iteration ``t``: the value of the piece
    whose interval contains t (right-continuous at boundaries)."""
    pieces = profile.schedules.get(service)
    if pieces is None:
        raise ConfigurationError(f"unknown service {service!r}")
    if t < 0:
        raise InvariantViolation(f"iteration must be non-negative, got {t}")
    for start, quality in reversed(pieces):
        if t >= start:
            return quality
    raise AssertionError("unreachable: first piece starts at 0")


@dataclass(frozen=True, slots=True)
class RecommendationRecord:
    """One recommendation held by a provider: a [0, 1] rating of a relying
    party's service, from a user (internal) or another provider (external)."""

    source: EntityId
    subject: EntityId
    service: str
    value: float
    prefs: tuple[float, ...] = field(default_factory=tuple)
    iteration: int = 0

    def __post_init__(self) -> None:
        if self.source.kind is EntityKind.RELYING_PARTY:
            raise InvariantViolation("a relying party cannot be a recommendation source")
        if self.subject.kind is not EntityKind.RELYING_PARTY:
            raise InvariantViolation("recommendation subject must be a relying party")
        _check_unit("recommendation value", self.value)
        if self.iteration < 0:
            raise InvariantViolation("iteration must be non-negative")
        validate_prefs(self.prefs)


@dataclass(frozen=True, slots=True)
class SourceWeight:
    """Per-(provider, source) credibility weight driving aggregation."""

    owner: EntityId
    source: EntityId
    weight: float

    def __post_init__(self) -> None:
        if self.owner.kind is not EntityKind.PROVIDER:
            raise InvariantViolation("only providers own source weights")
        _check_unit("source weight", self.weight)
