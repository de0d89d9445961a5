"""Behavior models for users, identity providers, and relying parties:
honest actors plus the attack taxonomy (always-biased raters, camouflaged
raters, Sybil identity replacement, recommender-list manipulation,
non-participation).

All operations are pure functions of their arguments; randomness comes in
only through an explicitly passed generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .model import EntityId, InvariantViolation, _check_unit

GOOD_BAND = (0.9, 1.0)
BAD_BAND = (0.0, 0.1)


class UserBehavior(Enum):
    NORMAL = "normal"
    POSITIVE_RATER = "positive_rater"
    NEGATIVE_RATER = "negative_rater"


class ProviderKind(Enum):
    NORMAL = "normal"
    POSITIVE_RATER = "positive_rater"
    NEGATIVE_RATER = "negative_rater"
    CAMOUFLAGED_POSITIVE = "camouflaged_positive"
    CAMOUFLAGED_NEGATIVE = "camouflaged_negative"
    SYBIL_POSITIVE = "sybil_positive"
    SYBIL_NEGATIVE = "sybil_negative"


_CAMOUFLAGED = {ProviderKind.CAMOUFLAGED_POSITIVE, ProviderKind.CAMOUFLAGED_NEGATIVE}
_SYBIL_PROVIDERS = {ProviderKind.SYBIL_POSITIVE, ProviderKind.SYBIL_NEGATIVE}
_POSITIVE = {ProviderKind.POSITIVE_RATER, ProviderKind.SYBIL_POSITIVE}
_NEGATIVE = {ProviderKind.NEGATIVE_RATER, ProviderKind.SYBIL_NEGATIVE}


@dataclass(frozen=True, slots=True)
class ProviderBehavior:
    kind: ProviderKind = ProviderKind.NORMAL
    camouflage_pct: float = 0.0
    sybil_period: int = 0

    def __post_init__(self) -> None:
        if self.kind in _CAMOUFLAGED:
            if not 0.0 <= self.camouflage_pct <= 100.0:
                raise InvariantViolation(
                    f"camouflage_pct must lie in [0, 100], got {self.camouflage_pct!r}"
                )
        elif self.camouflage_pct:
            raise InvariantViolation(f"{self.kind.value} takes no camouflage_pct")
        if self.kind in _SYBIL_PROVIDERS:
            if self.sybil_period < 1:
                raise InvariantViolation(
                    f"sybil_period must be >= 1, got {self.sybil_period}"
                )
        elif self.sybil_period:
            raise InvariantViolation(f"{self.kind.value} takes no sybil_period")

    @property
    def is_sybil(self) -> bool:
        return self.kind in _SYBIL_PROVIDERS


class RelyingPartyKind(Enum):
    NORMAL = "normal"
    MALICIOUS = "malicious"
    SYBIL = "sybil"
    NOT_PARTICIPATIVE = "not_participative"


@dataclass(frozen=True, slots=True)
class RelyingPartyBehavior:
    kind: RelyingPartyKind = RelyingPartyKind.NORMAL
    sybil_period: int = 0

    def __post_init__(self) -> None:
        if self.kind is RelyingPartyKind.SYBIL:
            if self.sybil_period < 1:
                raise InvariantViolation(
                    f"sybil_period must be >= 1, got {self.sybil_period}"
                )
        elif self.sybil_period:
            raise InvariantViolation(f"{self.kind.value} takes no sybil_period")

    @property
    def is_sybil(self) -> bool:
        return self.kind is RelyingPartyKind.SYBIL


def user_feedback(
    behavior: UserBehavior, quality: float, rng: np.random.Generator
) -> float:
    """Rating a user hands back after an interaction of perceived
    ``quality``. Honest users echo the quality; biased raters draw from
    their band regardless of it."""
    _check_unit("perceived quality", quality)
    if behavior is UserBehavior.POSITIVE_RATER:
        return float(rng.uniform(*GOOD_BAND))
    if behavior is UserBehavior.NEGATIVE_RATER:
        return float(rng.uniform(*BAD_BAND))
    return quality


def provider_external_answer(
    behavior: ProviderBehavior, honest: float, rng: np.random.Generator
) -> float:
    """Value a provider answers when another provider queries it, given
    ``honest``, its true internal aggregate for the subject."""
    _check_unit("honest aggregate", honest)
    kind = behavior.kind
    if kind in _POSITIVE:
        return float(rng.uniform(*GOOD_BAND))
    if kind in _NEGATIVE:
        return float(rng.uniform(*BAD_BAND))
    if kind is ProviderKind.CAMOUFLAGED_POSITIVE:
        if rng.random() < behavior.camouflage_pct / 100.0:
            return float(rng.uniform(*GOOD_BAND))
        return honest
    if kind is ProviderKind.CAMOUFLAGED_NEGATIVE:
        if rng.random() < behavior.camouflage_pct / 100.0:
            return float(rng.uniform(*BAD_BAND))
        return honest
    return honest


def expected_external_answer(behavior: ProviderBehavior, honest: float) -> float:
    """Deterministic expectation of :func:`provider_external_answer`.

    This is what a relying party probing a provider for its current
    recommendation about itself learns, so it drives malicious
    recommender-list ranking without consuming randomness."""
    _check_unit("honest aggregate", honest)
    kind = behavior.kind
    good_mid = (GOOD_BAND[0] + GOOD_BAND[1]) / 2.0
    bad_mid = (BAD_BAND[0] + BAD_BAND[1]) / 2.0
    if kind in _POSITIVE:
        return good_mid
    if kind in _NEGATIVE:
        return bad_mid
    if kind is ProviderKind.CAMOUFLAGED_POSITIVE:
        frac = behavior.camouflage_pct / 100.0
        return frac * good_mid + (1.0 - frac) * honest
    if kind is ProviderKind.CAMOUFLAGED_NEGATIVE:
        frac = behavior.camouflage_pct / 100.0
        return frac * bad_mid + (1.0 - frac) * honest
    return honest


@dataclass(frozen=True, slots=True)
class RecommenderCandidate:
    """Per-provider metadata a relying party ranks when building its
    recommender list."""

    provider: EntityId
    last_interaction: int
    aggregate: float


def rp_recommender_list(
    behavior: RelyingPartyBehavior,
    candidates: Sequence[RecommenderCandidate],
    size: int,
) -> list[EntityId] | None:
    """Recommender list a relying party returns, or ``None`` when it does
    not participate. Honest (and Sybil) parties list the most recent
    interactors; malicious ones list whoever currently recommends them
    best. Ties break on the provider id."""
    if size < 1:
        raise InvariantViolation(f"list size must be >= 1, got {size}")
    if behavior.kind is RelyingPartyKind.NOT_PARTICIPATIVE:
        return None
    if behavior.kind is RelyingPartyKind.MALICIOUS:
        ranked = sorted(
            candidates, key=lambda c: (-c.aggregate, c.provider.sort_key())
        )
    else:
        ranked = sorted(
            candidates, key=lambda c: (-c.last_interaction, c.provider.sort_key())
        )
    return [c.provider for c in ranked[:size]]


def sybil_tick(entity: EntityId, period: int, t: int) -> EntityId | None:
    """Identity replacement check for a Sybil actor: at every multiple of
    ``period`` after the start, return the next incarnation. The caller
    must then reset all state keyed by the old id."""
    if period < 1:
        raise InvariantViolation(f"sybil period must be >= 1, got {period}")
    if t > 0 and t % period == 0:
        return entity.next_incarnation()
    return None
