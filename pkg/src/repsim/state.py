"""Mutable state of a single simulation run: columnar per-provider record
stores, score caches, the world container, and the per-iteration log
types the metrics are derived from."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import kernels
from .behaviors import ProviderBehavior, RelyingPartyBehavior, UserBehavior
from .model import EntityId, QoSProfile

SubjectKey = tuple[EntityId, str]


class RecordStore:
    """Append-only columnar store of the user feedback one provider holds
    about one (relying party, service) subject.

    Rows are appended in simulation order, which is exactly the canonical
    (iteration, source) order the rule kernels assume. The store also
    memoizes its own honest summary (aggregate against the neutral
    preference vector, plus the mean contributing preference vector) keyed
    on the row count, since the store only ever grows.
    """

    __slots__ = (
        "_dim", "_n", "_values", "_iters", "_prefs", "_sources",
        "_summary_n", "_summary",
    )

    def __init__(self, dim: int, capacity: int = 16):
        self._dim = dim
        self._n = 0
        self._values = np.empty(capacity, dtype=np.float64)
        self._iters = np.empty(capacity, dtype=np.int64)
        self._prefs = np.empty((capacity, dim), dtype=np.float64)
        self._sources = np.empty(capacity, dtype=np.int64)
        self._summary_n = -1
        self._summary: tuple[float, np.ndarray] | None = None

    def __len__(self) -> int:
        return self._n

    def append(self, value: float, iteration: int, prefs: np.ndarray, source_ordinal: int) -> None:
        if self._n == self._values.shape[0]:
            self._grow()
        i = self._n
        self._values[i] = value
        self._iters[i] = iteration
        self._prefs[i] = prefs
        self._sources[i] = source_ordinal
        self._n = i + 1

    def _grow(self) -> None:
        cap = self._values.shape[0] * 2
        self._values = np.resize(self._values, cap)
        self._iters = np.resize(self._iters, cap)
        prefs = np.empty((cap, self._dim), dtype=np.float64)
        prefs[: self._n] = self._prefs[: self._n]
        self._prefs = prefs
        self._sources = np.resize(self._sources, cap)

    @property
    def values(self) -> np.ndarray:
        return self._values[: self._n]

    @property
    def iterations(self) -> np.ndarray:
        return self._iters[: self._n]

    @property
    def prefs(self) -> np.ndarray:
        return self._prefs[: self._n]

    @property
    def source_ordinals(self) -> np.ndarray:
        return self._sources[: self._n]

    def summary(self, neutral: np.ndarray, default: float) -> tuple[float, np.ndarray]:
        """Honest aggregate of the stored values (similarity measured
        against the neutral preference vector) and the mean contributing
        preference vector."""
        if self._summary_n != self._n:
            if self._n == 0:
                self._summary = (default, neutral.copy())
            else:
                sims = kernels.similarities(self.prefs, neutral)
                mask = np.ones(self._n, dtype=np.bool_)
                agg = kernels.engine_score(
                    self.values, np.ones(self._n, dtype=np.float64), sims,
                    self.iterations, mask, kernels.ENGINE_WEIGHTED_MEAN,
                    1.0, 0, default,
                )
                self._summary = (float(agg), self.prefs.mean(axis=0))
            self._summary_n = self._n
        return self._summary


@dataclass(frozen=True, slots=True)
class CacheEntry:
    """A computed reputation score plus the external sources (and their
    answers) that fed it, kept so later feedback can adjust their weights."""

    score: float
    computed_at: int
    externals: tuple[tuple[EntityId, float], ...] = ()


@dataclass
class UserState:
    id: EntityId
    behavior: UserBehavior
    prefs: np.ndarray
    provider_index: int


@dataclass
class ProviderState:
    actor: int
    id: EntityId
    behavior: ProviderBehavior
    stores: dict[SubjectKey, RecordStore] = field(default_factory=dict)
    weights: dict[EntityId, float] = field(default_factory=dict)
    cache: dict[SubjectKey, CacheEntry] = field(default_factory=dict)

    def record_count(self) -> int:
        return sum(len(store) for store in self.stores.values())


@dataclass
class RelyingPartyState:
    actor: int
    id: EntityId
    behavior: RelyingPartyBehavior
    qos: QoSProfile
    services: tuple[str, ...]
    last_interaction: dict[EntityId, int] = field(default_factory=dict)


@dataclass
class WorldState:
    """Everything one run mutates. Owned by exactly one execution context;
    the random stream is consumed in a defined order."""

    t: int
    users: list[UserState]
    providers: list[ProviderState]
    relying_parties: list[RelyingPartyState]
    rng: np.random.Generator
    scenario: Any
    monitored: int
    providers_by_id: dict[EntityId, ProviderState]
    neutral_prefs: np.ndarray
    rule_codes: np.ndarray
    rule_p1: np.ndarray
    rule_p2: np.ndarray
    engine_code: int
    engine_decay: float
    default_score: float
    learning_rate: float


@dataclass(frozen=True, slots=True)
class RequestRecord:
    """One user request inside an iteration: who asked which provider about
    what, the presented score, and what the interaction produced."""

    user: EntityId
    provider: EntityId
    relying_party: EntityId
    service: str
    presented: float
    interacted: bool
    feedback: float | None
    satisfaction: float | None
    provider_normal: bool
    user_normal: bool


@dataclass(frozen=True, slots=True)
class IterationLog:
    """Everything observable about one iteration, self-contained enough
    for all chart series to be derived from logs alone."""

    t: int
    monitored: int
    requests: tuple[RequestRecord, ...]
    real_qos: Mapping[str, float]
    cache_hits: int
    cache_misses: int
    external_queries: int
