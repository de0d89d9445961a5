"""The simulation state machine: reputation requests (gather, filter,
aggregate, cache), interactions with feedback and weight adjustment,
Sybil identity resets, and the per-iteration step loop.

Determinism contract: a run is a pure function of (scenario, seed). All
randomness flows from one 64-bit seed through a single numpy PCG64
stream, consumed in a fixed order: per iteration, first the activity
draw for every user in ascending user id (plus a service choice draw for
active users when the target offers several services), then for each
active user in ascending id the external answer draws in canonical
recommender order, the interaction draw, the perception noise draw (only
when noise is configured), and the feedback draw (only for biased
raters).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, metrics
from .behaviors import (
    ProviderKind,
    RecommenderCandidate,
    RelyingPartyKind,
    UserBehavior,
    expected_external_answer,
    provider_external_answer,
    rp_recommender_list,
    sybil_tick,
    user_feedback,
)
from .engines import WeightedInput, adjust_weight, encode_rules
from .metrics import SimulationResult
from .model import (
    ConfigurationError,
    EntityId,
    EntityKind,
    InvariantViolation,
    RecommendationRecord,
    clamp01,
    qos_at,
)
from .state import (
    CacheEntry,
    IterationLog,
    ProviderState,
    RecordStore,
    RelyingPartyState,
    RequestRecord,
    UserState,
    WorldState,
)

INITIAL_SOURCE_WEIGHT = 0.5


def init_world(scenario, seed: int) -> WorldState:
    """Build the iteration-zero world: empty stores and caches, neutral
    weights, and user preference vectors drawn where a group asks for
    uniform ones."""
    scenario.validate()
    rng = np.random.default_rng(seed)
    dim = scenario.preference_dimension

    providers = []
    provider_index: dict[str, int] = {}
    for i, decl in enumerate(scenario.providers):
        providers.append(
            ProviderState(actor=i, id=EntityId(EntityKind.PROVIDER, i), behavior=decl.behavior)
        )
        provider_index[decl.id] = i

    relying_parties = []
    for i, decl in enumerate(scenario.relying_parties):
        relying_parties.append(
            RelyingPartyState(
                actor=i,
                id=EntityId(EntityKind.RELYING_PARTY, i),
                behavior=decl.behavior,
                qos=scenario.qos_profile(decl),
                services=tuple(svc.id for svc in decl.services),
            )
        )

    users = []
    ordinal = 0
    for group in scenario.users:
        home = provider_index[group.provider]
        for _ in range(group.count):
            if group.preferences is None:
                prefs = rng.random(dim)
            else:
                prefs = np.array(group.preferences, dtype=np.float64)
            users.append(
                UserState(
                    id=EntityId(EntityKind.USER, ordinal),
                    behavior=group.behavior,
                    prefs=prefs,
                    provider_index=home,
                )
            )
            ordinal += 1

    codes, p1, p2 = encode_rules(scenario.rules)
    engine = scenario.engine
    return WorldState(
        t=0,
        users=users,
        providers=providers,
        relying_parties=relying_parties,
        rng=rng,
        scenario=scenario,
        monitored=scenario.monitored_index(),
        providers_by_id={p.id: p for p in providers},
        neutral_prefs=np.full(dim, 0.5, dtype=np.float64),
        rule_codes=codes,
        rule_p1=p1,
        rule_p2=p2,
        engine_code=engine.code(),
        engine_decay=engine.decay if engine.decay is not None else 1.0,
        default_score=engine.default_score,
        learning_rate=engine.learning_rate,
    )


def _store_summary(provider: ProviderState, key, world: WorldState) -> tuple[float, np.ndarray]:
    store = provider.stores.get(key)
    if store is None or len(store) == 0:
        return world.default_score, world.neutral_prefs
    return store.summary(world.neutral_prefs, world.default_score)


@dataclass
class GatherBatch:
    """Columnar view of one gathered input set: the provider's internal
    records followed by the external answers, in canonical order."""

    values: np.ndarray
    iters: np.ndarray
    prefs: np.ndarray
    weights: np.ndarray
    internal_count: int
    internal_sources: np.ndarray
    ext_sources: tuple[EntityId, ...]
    ext_answers: tuple[float, ...]
    subject: EntityId
    service: str
    query_prefs: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]


def _gather_batch(
    provider: ProviderState,
    rp: RelyingPartyState,
    service: str,
    user_prefs: np.ndarray,
    world: WorldState,
    t: int,
) -> GatherBatch:
    key = (rp.id, service)
    store = provider.stores.get(key)
    n_int = len(store) if store is not None else 0

    externals: list[tuple[EntityId, float, np.ndarray, float]] = []
    if rp.behavior.kind is not RelyingPartyKind.NOT_PARTICIPATIVE:
        need_aggregate = rp.behavior.kind is RelyingPartyKind.MALICIOUS
        candidates = []
        for other in world.providers:
            if other is provider:
                continue  # the querying provider is never its own recommender
            last = rp.last_interaction.get(other.id)
            if last is None:
                continue
            if need_aggregate:
                honest, _ = _store_summary(other, key, world)
                aggregate = expected_external_answer(other.behavior, honest)
            else:
                aggregate = 0.0
            candidates.append(RecommenderCandidate(other.id, last, aggregate))
        listed = rp_recommender_list(
            rp.behavior, candidates, world.scenario.recommender_list_size
        )
        if listed:
            # Canonical order fixes both batch layout and rng consumption.
            for source_id in sorted(listed, key=EntityId.sort_key):
                other = world.providers_by_id[source_id]
                honest, mean_prefs = _store_summary(other, key, world)
                answer = provider_external_answer(other.behavior, honest, world.rng)
                weight = provider.weights.get(source_id, INITIAL_SOURCE_WEIGHT)
                externals.append((source_id, answer, mean_prefs, weight))

    n_ext = len(externals)
    dim = world.neutral_prefs.shape[0]
    if n_ext == 0:
        if store is None:
            values = np.empty(0, dtype=np.float64)
            iters = np.empty(0, dtype=np.int64)
            prefs = np.empty((0, dim), dtype=np.float64)
            sources = np.empty(0, dtype=np.int64)
        else:
            values, iters, prefs = store.values, store.iterations, store.prefs
            sources = store.source_ordinals
        weights = np.ones(n_int, dtype=np.float64)
    else:
        k = n_int + n_ext
        values = np.empty(k, dtype=np.float64)
        iters = np.empty(k, dtype=np.int64)
        prefs = np.empty((k, dim), dtype=np.float64)
        weights = np.ones(k, dtype=np.float64)
        if store is not None:
            values[:n_int] = store.values
            iters[:n_int] = store.iterations
            prefs[:n_int] = store.prefs
            sources = store.source_ordinals
        else:
            sources = np.empty(0, dtype=np.int64)
        for j, (_, answer, mean_prefs, weight) in enumerate(externals):
            values[n_int + j] = answer
            iters[n_int + j] = t
            prefs[n_int + j] = mean_prefs
            weights[n_int + j] = weight

    return GatherBatch(
        values=values,
        iters=iters,
        prefs=prefs,
        weights=weights,
        internal_count=n_int,
        internal_sources=sources,
        ext_sources=tuple(e[0] for e in externals),
        ext_answers=tuple(e[1] for e in externals),
        subject=rp.id,
        service=service,
        query_prefs=user_prefs,
    )


def _batch_to_inputs(batch: GatherBatch) -> list[WeightedInput]:
    sims = kernels.similarities(batch.prefs, batch.query_prefs)
    out = []
    for i in range(len(batch)):
        if i < batch.internal_count:
            source = EntityId(EntityKind.USER, int(batch.internal_sources[i]))
        else:
            source = batch.ext_sources[i - batch.internal_count]
        record = RecommendationRecord(
            source=source,
            subject=batch.subject,
            service=batch.service,
            value=float(batch.values[i]),
            prefs=tuple(float(x) for x in batch.prefs[i]),
            iteration=int(batch.iters[i]),
        )
        out.append(WeightedInput(record, float(batch.weights[i]), float(sims[i])))
    return out


def gather(
    provider: ProviderState,
    rp: RelyingPartyState,
    service: str,
    user_prefs,
    world: WorldState,
    t: int,
) -> list[WeightedInput]:
    """Collect everything a reputation computation would consider: the
    provider's own feedback records about (rp, service) plus one answer
    per provider the relying party lists as a recommender. Internal
    records carry full trust; external sources carry the owner's stored
    weight, 0.5 when unseen."""
    query = np.asarray(user_prefs, dtype=np.float64)
    batch = _gather_batch(provider, rp, service, query, world, t)
    return _batch_to_inputs(batch)


@dataclass(frozen=True, slots=True)
class RequestOutcome:
    score: float
    externals_used: tuple[tuple[EntityId, float], ...]
    cache_hit: bool
    external_queries: int


def _request(
    provider: ProviderState,
    user: UserState,
    rp: RelyingPartyState,
    service: str,
    world: WorldState,
    t: int,
) -> RequestOutcome:
    key = (rp.id, service)
    entry = provider.cache.get(key)
    if entry is not None and t - entry.computed_at < world.scenario.cache_ttl:
        return RequestOutcome(entry.score, entry.externals, True, 0)

    batch = _gather_batch(provider, rp, service, user.prefs, world, t)
    score, mask = kernels.score_request(
        batch.values, batch.iters, batch.prefs, batch.weights, user.prefs,
        world.rule_codes, world.rule_p1, world.rule_p2,
        world.engine_code, world.engine_decay, t, world.default_score,
    )
    n_int = batch.internal_count
    used = tuple(
        (batch.ext_sources[j], batch.ext_answers[j])
        for j in range(len(batch.ext_sources))
        if mask[n_int + j]
    )
    provider.cache[key] = CacheEntry(float(score), t, used)
    return RequestOutcome(float(score), used, False, len(batch.ext_sources))


def request_reputation(
    provider: ProviderState,
    user: UserState,
    rp: RelyingPartyState,
    service: str,
    world: WorldState,
    t: int,
) -> float:
    """Score the provider presents to its user for (rp, service): a fresh
    cache entry if one is young enough, otherwise gather, filter through
    the rules, aggregate with the configured engine, and cache."""
    if user.provider_index != provider.actor:
        raise InvariantViolation(
            f"{user.id} does not belong to {provider.id}"
        )
    if rp not in world.relying_parties:
        raise ConfigurationError(f"unknown relying party {rp.id}")
    if service not in rp.services:
        raise ConfigurationError(
            f"unknown service {service!r} for {rp.id}"
        )
    return _request(provider, user, rp, service, world, t).score


def interact_and_feedback(
    user: UserState,
    provider: ProviderState,
    rp: RelyingPartyState,
    service: str,
    presented: float,
    world: WorldState,
    t: int,
    rng: np.random.Generator,
) -> tuple[float, float] | None:
    """Bernoulli(presented) interaction. When it happens: the user
    perceives the true service quality (plus configured noise), rates it
    per their behavior, the record lands in the provider's store, the
    relying party notes the interaction, and every external source used
    in the presented score has its weight adjusted against the feedback.
    Returns (feedback, satisfaction), or ``None`` without touching any
    state when the user walks away."""
    if rng.random() >= presented:
        return None

    quality = qos_at(rp.qos, service, t)
    if rp.qos.noise > 0.0:
        quality = clamp01(quality + rng.uniform(-rp.qos.noise, rp.qos.noise))
    feedback = user_feedback(user.behavior, quality, rng)

    key = (rp.id, service)
    store = provider.stores.get(key)
    if store is None:
        store = RecordStore(world.neutral_prefs.shape[0])
        provider.stores[key] = store
    store.append(feedback, t, user.prefs, user.id.ordinal)
    rp.last_interaction[provider.id] = t

    entry = provider.cache.get(key)
    if entry is not None:
        alpha = world.learning_rate
        for source_id, answer in entry.externals:
            current = provider.weights.get(source_id, INITIAL_SOURCE_WEIGHT)
            provider.weights[source_id] = adjust_weight(current, answer, feedback, alpha)

    satisfaction = 1.0 - abs(presented - feedback)
    return feedback, satisfaction


def _replace_provider_identity(world: WorldState, provider: ProviderState, new_id: EntityId) -> None:
    old = provider.id
    del world.providers_by_id[old]
    provider.id = new_id
    world.providers_by_id[new_id] = provider
    for other in world.providers:
        other.weights.pop(old, None)
        stale = [
            key for key, entry in other.cache.items()
            if any(source == old for source, _ in entry.externals)
        ]
        for key in stale:
            del other.cache[key]
    for rp in world.relying_parties:
        rp.last_interaction.pop(old, None)


def _replace_rp_identity(world: WorldState, rp: RelyingPartyState, new_id: EntityId) -> None:
    old = rp.id
    rp.id = new_id
    rp.last_interaction.clear()
    for provider in world.providers:
        for key in [k for k in provider.stores if k[0] == old]:
            del provider.stores[key]
        for key in [k for k in provider.cache if k[0] == old]:
            del provider.cache[key]


def step(world: WorldState) -> IterationLog:
    """Advance the world by one iteration and return its log. Order:
    Sybil identity ticks, then activity draws for every user, then each
    active user's request and interaction in ascending user id."""
    t = world.t
    scenario = world.scenario

    for provider in world.providers:
        if provider.behavior.is_sybil:
            bumped = sybil_tick(provider.id, provider.behavior.sybil_period, t)
            if bumped is not None:
                _replace_provider_identity(world, provider, bumped)
    for rp in world.relying_parties:
        if rp.behavior.is_sybil:
            bumped = sybil_tick(rp.id, rp.behavior.sybil_period, t)
            if bumped is not None:
                _replace_rp_identity(world, rp, bumped)

    monitored = world.relying_parties[world.monitored]
    active: list[tuple[UserState, RelyingPartyState, str]] = []
    for user in world.users:
        if world.rng.random() < scenario.p_active:
            if len(monitored.services) == 1:
                service = monitored.services[0]
            else:
                service = monitored.services[int(world.rng.integers(len(monitored.services)))]
            active.append((user, monitored, service))

    requests = []
    cache_hits = cache_misses = external_queries = 0
    for user, rp, service in active:
        provider = world.providers[user.provider_index]
        outcome = _request(provider, user, rp, service, world, t)
        if outcome.cache_hit:
            cache_hits += 1
        else:
            cache_misses += 1
        external_queries += outcome.external_queries
        result = interact_and_feedback(
            user, provider, rp, service, outcome.score, world, t, world.rng
        )
        feedback = satisfaction = None
        if result is not None:
            feedback, satisfaction = result
        requests.append(
            RequestRecord(
                user=user.id,
                provider=provider.id,
                relying_party=rp.id,
                service=service,
                presented=outcome.score,
                interacted=result is not None,
                feedback=feedback,
                satisfaction=satisfaction,
                provider_normal=provider.behavior.kind is ProviderKind.NORMAL,
                user_normal=user.behavior is UserBehavior.NORMAL,
            )
        )

    real_qos = {svc: qos_at(monitored.qos, svc, t) for svc in monitored.services}
    world.t = t + 1
    return IterationLog(
        t=t,
        monitored=monitored.id.ordinal,
        requests=tuple(requests),
        real_qos=real_qos,
        cache_hits=cache_hits,
        cache_misses=cache_misses,
        external_queries=external_queries,
    )


def run(scenario, seed: int, observer=None) -> SimulationResult:
    """Execute a full scenario from one seed. Pure in (scenario, seed):
    identical arguments produce identical results. ``observer(world, log)``,
    when given, is called after every iteration; it must not mutate the
    world if determinism is to hold."""
    world = init_world(scenario, seed)
    logs = []
    for _ in range(scenario.iterations):
        log = step(world)
        if observer is not None:
            observer(world, log)
        logs.append(log)
    return metrics.build_result(scenario, seed, logs)
