"""Scenario files: a flat TOML document describing entities, behaviors,
engine configuration, rules, and run length. Parsing validates the whole
document and reports every problem at once, each error naming the
offending key. A scenario also has a canonical text form whose SHA-256,
combined with the run seed, fingerprints a result.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .behaviors import (
    ProviderBehavior,
    ProviderKind,
    RelyingPartyBehavior,
    RelyingPartyKind,
    UserBehavior,
)
from .engines import (
    CapCount,
    EngineConfig,
    EngineKind,
    MaxAge,
    MinSourceWeight,
    OverloadCap,
    Rule,
)
from .model import ConfigurationError, InvariantViolation, QoSProfile

MAX_SEED = 2**64 - 1

DEFAULT_P_ACTIVE = 0.3
DEFAULT_PREFERENCE_DIMENSION = 2
DEFAULT_RECOMMENDER_LIST_SIZE = 2
DEFAULT_SERVICE = ("svc", ((0, 0.5),))


class ScenarioValidationError(ConfigurationError):
    """Carries every validation problem found in a scenario document."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class UserGroup:
    count: int
    behavior: UserBehavior = UserBehavior.NORMAL
    provider: str = ""
    preferences: tuple[float, ...] | None = None  # None = uniform per user


@dataclass(frozen=True)
class ProviderDecl:
    id: str
    behavior: ProviderBehavior = ProviderBehavior()


@dataclass(frozen=True)
class ServiceDecl:
    id: str
    schedule: tuple[tuple[int, float], ...] = ((0, 0.5),)


@dataclass(frozen=True)
class RelyingPartyDecl:
    id: str
    behavior: RelyingPartyBehavior = RelyingPartyBehavior()
    services: tuple[ServiceDecl, ...] = (ServiceDecl(*DEFAULT_SERVICE),)
    noise: float | None = None


@dataclass(frozen=True)
class Scenario:
    iterations: int
    seed: int = 0
    p_active: float = DEFAULT_P_ACTIVE
    preference_dimension: int = DEFAULT_PREFERENCE_DIMENSION
    engine: EngineConfig = field(default_factory=EngineConfig)
    rules: tuple[Rule, ...] = ()
    cache_ttl: int = 0
    recommender_list_size: int = DEFAULT_RECOMMENDER_LIST_SIZE
    feedback_noise: float = 0.0
    warmup: int | None = None
    monitored_rp: str | None = None
    users: tuple[UserGroup, ...] = ()
    providers: tuple[ProviderDecl, ...] = ()
    relying_parties: tuple[RelyingPartyDecl, ...] = ()

    # -- semantic checks -------------------------------------------------

    def validation_errors(self) -> list[str]:
        errors: list[str] = []

        def check(ok: bool, message: str) -> None:
            if not ok:
                errors.append(message)

        check(self.iterations >= 0, f"iterations: must be >= 0, got {self.iterations}")
        check(0 <= self.seed <= MAX_SEED, f"seed: must be a 64-bit unsigned integer, got {self.seed}")
        check(0.0 <= self.p_active <= 1.0, f"p_active: must lie in [0, 1], got {self.p_active}")
        check(self.preference_dimension >= 1,
              f"preference_dimension: must be >= 1, got {self.preference_dimension}")
        check(self.cache_ttl >= 0, f"cache_ttl: must be >= 0, got {self.cache_ttl}")
        check(self.recommender_list_size >= 1,
              f"recommender_list_size: must be >= 1, got {self.recommender_list_size}")
        check(0.0 <= self.feedback_noise <= 0.5,
              f"feedback_noise: must lie in [0, 0.5], got {self.feedback_noise}")
        if self.warmup is not None:
            check(0 <= self.warmup < self.iterations,
                  f"warmup: must lie in [0, iterations), got {self.warmup}")

        check(len(self.users) >= 1, "user_group: at least one user group is required")
        check(len(self.providers) >= 1, "provider: at least one provider is required")
        check(len(self.relying_parties) >= 1,
              "relying_party: at least one relying party is required")

        provider_ids = [p.id for p in self.providers]
        for pid in sorted({p for p in provider_ids if provider_ids.count(p) > 1}):
            errors.append(f"provider.id: duplicate id {pid!r}")
        rp_ids = [r.id for r in self.relying_parties]
        for rid in sorted({r for r in rp_ids if rp_ids.count(r) > 1}):
            errors.append(f"relying_party.id: duplicate id {rid!r}")

        known_providers = set(provider_ids)
        for i, group in enumerate(self.users):
            where = f"user_group[{i}]"
            check(group.count >= 1, f"{where}.count: must be >= 1, got {group.count}")
            if group.provider not in known_providers:
                errors.append(
                    f"{where}.provider: references undefined provider {group.provider!r}"
                )
            if group.preferences is not None:
                if len(group.preferences) != self.preference_dimension:
                    errors.append(
                        f"{where}.preferences: expected {self.preference_dimension} "
                        f"components, got {len(group.preferences)}"
                    )
                for c in group.preferences:
                    if not 0.0 <= c <= 1.0:
                        errors.append(
                            f"{where}.preferences: component {c!r} outside [0, 1]"
                        )
        if self.monitored_rp is not None and self.monitored_rp not in set(rp_ids):
            errors.append(
                f"monitored_rp: references undefined relying party {self.monitored_rp!r}"
            )
        for i, rp in enumerate(self.relying_parties):
            where = f"relying_party[{i}]"
            service_ids = [s.id for s in rp.services]
            check(len(rp.services) >= 1, f"{where}.service: at least one service is required")
            for sid in sorted({s for s in service_ids if service_ids.count(s) > 1}):
                errors.append(f"{where}.service.id: duplicate service id {sid!r}")
            if rp.noise is not None and not 0.0 <= rp.noise <= 0.5:
                errors.append(f"{where}.noise: must lie in [0, 0.5], got {rp.noise}")
            for svc in rp.services:
                swhere = f"{where}.service[{svc.id!r}].schedule"
                if not svc.schedule:
                    errors.append(f"{swhere}: must not be empty")
                    continue
                if svc.schedule[0][0] != 0:
                    errors.append(f"{swhere}: first piece must start at iteration 0")
                prev = -1
                for start, quality in svc.schedule:
                    if start <= prev:
                        errors.append(f"{swhere}: piece starts must strictly increase")
                        break
                    prev = start
                for _, quality in svc.schedule:
                    if not 0.0 <= quality <= 1.0:
                        errors.append(f"{swhere}: quality {quality!r} outside [0, 1]")
        return errors

    def validate(self) -> None:
        errors = self.validation_errors()
        if errors:
            raise ScenarioValidationError(errors)

    # -- derived accessors -------------------------------------------------

    def warmup_iterations(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return self.iterations // 10

    def monitored_index(self) -> int:
        if self.monitored_rp is None:
            return 0
        for i, rp in enumerate(self.relying_parties):
            if rp.id == self.monitored_rp:
                return i
        raise ConfigurationError(f"unknown relying party {self.monitored_rp!r}")

    def qos_profile(self, decl: RelyingPartyDecl) -> QoSProfile:
        noise = decl.noise if decl.noise is not None else self.feedback_noise
        return QoSProfile(
            schedules={svc.id: svc.schedule for svc in decl.services},
            noise=noise,
        )

    def with_engine(self, engine: EngineConfig) -> "Scenario":
        return replace(self, engine=engine)

    # -- canonical form ----------------------------------------------------

    def canonical_text(self) -> str:
        lines = [
            f"iterations = {self.iterations}",
            f"seed = {self.seed}",
            f"p_active = {_toml_value(self.p_active)}",
            f"preference_dimension = {self.preference_dimension}",
            f"cache_ttl = {self.cache_ttl}",
            f"recommender_list_size = {self.recommender_list_size}",
            f"feedback_noise = {_toml_value(self.feedback_noise)}",
        ]
        if self.warmup is not None:
            lines.append(f"warmup = {self.warmup}")
        if self.monitored_rp is not None:
            lines.append(f"monitored_rp = {_toml_value(self.monitored_rp)}")

        lines += ["", "[engine]", f"kind = {_toml_value(self.engine.kind.value)}"]
        if self.engine.decay is not None:
            lines.append(f"decay = {_toml_value(self.engine.decay)}")
        lines.append(f"default_score = {_toml_value(self.engine.default_score)}")
        lines.append(f"learning_rate = {_toml_value(self.engine.learning_rate)}")

        for rule in self.rules:
            lines += ["", "[[rule]]"]
            if isinstance(rule, CapCount):
                lines += ['kind = "cap_count"', f"count = {rule.count}"]
            elif isinstance(rule, MinSourceWeight):
                lines += ['kind = "min_source_weight"',
                          f"threshold = {_toml_value(rule.threshold)}"]
            elif isinstance(rule, MaxAge):
                lines += ['kind = "max_age"', f"age = {rule.age}"]
            else:
                lines += ['kind = "overload_cap"', f"trigger = {rule.trigger}",
                          f"cap = {rule.cap}"]

        for provider in self.providers:
            lines += ["", "[[provider]]", f"id = {_toml_value(provider.id)}",
                      f"behavior = {_toml_value(provider.behavior.kind.value)}"]
            if provider.behavior.kind.value.startswith("camouflaged"):
                lines.append(
                    f"camouflage_pct = {_toml_value(float(provider.behavior.camouflage_pct))}"
                )
            if provider.behavior.is_sybil:
                lines.append(f"sybil_period = {provider.behavior.sybil_period}")

        for group in self.users:
            lines += ["", "[[user_group]]", f"count = {group.count}",
                      f"behavior = {_toml_value(group.behavior.value)}",
                      f"provider = {_toml_value(group.provider)}"]
            if group.preferences is None:
                lines.append('preferences = "uniform"')
            else:
                inner = ", ".join(_toml_value(float(c)) for c in group.preferences)
                lines.append(f"preferences = [{inner}]")

        for rp in self.relying_parties:
            lines += ["", "[[relying_party]]", f"id = {_toml_value(rp.id)}",
                      f"behavior = {_toml_value(rp.behavior.kind.value)}"]
            if rp.behavior.is_sybil:
                lines.append(f"sybil_period = {rp.behavior.sybil_period}")
            if rp.noise is not None:
                lines.append(f"noise = {_toml_value(rp.noise)}")
            for svc in rp.services:
                lines += ["", "[[relying_party.service]]", f"id = {_toml_value(svc.id)}"]
                pieces = ", ".join(
                    f"[{start}, {_toml_value(float(quality))}]"
                    for start, quality in svc.schedule
                )
                lines.append(f"schedule = [{pieces}]")

        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    def fingerprint(self, seed: int) -> str:
        payload = self.canonical_text() + f"run_seed = {seed}\n"
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        text = repr(v)
        return text if any(ch in text for ch in ".einf") else text + ".0"
    if isinstance(v, int):
        return str(v)
    return json.dumps(v)


# -- parsing ---------------------------------------------------------------


class _Reader:
    """Pulls typed values out of a parsed TOML table, recording an error
    for every wrong type, out-of-range value, or unknown key."""

    def __init__(self, table: dict, where: str, errors: list[str]):
        self.table = dict(table)
        self.where = where
        self.errors = errors

    def _key(self, name: str) -> str:
        return f"{self.where}.{name}" if self.where else name

    def error(self, name: str, message: str) -> None:
        self.errors.append(f"{self._key(name)}: {message}")

    def take(self, name: str, kinds, default=None, required=False):
        if name not in self.table:
            if required:
                self.error(name, "missing required key")
            return default
        value = self.table.pop(name)
        if kinds is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kinds) or isinstance(value, bool) and kinds is not bool:
            expected = kinds.__name__ if isinstance(kinds, type) else "value"
            self.error(name, f"expected {expected}, got {value!r}")
            return default
        return value

    def take_tables(self, name: str) -> list[dict]:
        value = self.table.pop(name, [])
        if not isinstance(value, list) or any(not isinstance(x, dict) for x in value):
            self.error(name, "expected an array of tables")
            return []
        return value

    def finish(self) -> None:
        for name in self.table:
            self.error(name, "unknown key")


def _parse_enum(reader: _Reader, name: str, enum_cls, default):
    raw = reader.take(name, str)
    if raw is None:
        return default
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(e.value for e in enum_cls)
        reader.error(name, f"unknown value {raw!r} (expected one of: {allowed})")
        return default


def _parse_provider_behavior(reader: _Reader) -> ProviderBehavior:
    kind = _parse_enum(reader, "behavior", ProviderKind, ProviderKind.NORMAL)
    pct = reader.take("camouflage_pct", float, default=None)
    period = reader.take("sybil_period", int, default=None)
    kwargs = {}
    camouflaged = kind in (ProviderKind.CAMOUFLAGED_POSITIVE, ProviderKind.CAMOUFLAGED_NEGATIVE)
    sybil = kind in (ProviderKind.SYBIL_POSITIVE, ProviderKind.SYBIL_NEGATIVE)
    if camouflaged:
        if pct is None:
            reader.error("camouflage_pct", f"required for behavior {kind.value!r}")
            pct = 0.0
        kwargs["camouflage_pct"] = pct
    elif pct is not None:
        reader.error("camouflage_pct", f"not allowed for behavior {kind.value!r}")
    if sybil:
        if period is None:
            reader.error("sybil_period", f"required for behavior {kind.value!r}")
            period = 1
        kwargs["sybil_period"] = period
    elif period is not None:
        reader.error("sybil_period", f"not allowed for behavior {kind.value!r}")
    try:
        return ProviderBehavior(kind, **kwargs)
    except InvariantViolation as exc:
        reader.error("behavior", str(exc))
        return ProviderBehavior()


def _parse_rp_behavior(reader: _Reader) -> RelyingPartyBehavior:
    kind = _parse_enum(reader, "behavior", RelyingPartyKind, RelyingPartyKind.NORMAL)
    period = reader.take("sybil_period", int, default=None)
    kwargs = {}
    if kind is RelyingPartyKind.SYBIL:
        if period is None:
            reader.error("sybil_period", "required for behavior 'sybil'")
            period = 1
        kwargs["sybil_period"] = period
    elif period is not None:
        reader.error("sybil_period", f"not allowed for behavior {kind.value!r}")
    try:
        return RelyingPartyBehavior(kind, **kwargs)
    except InvariantViolation as exc:
        reader.error("behavior", str(exc))
        return RelyingPartyBehavior()


def _parse_rule(table: dict, index: int, errors: list[str]) -> Rule | None:
    reader = _Reader(table, f"rule[{index}]", errors)
    kind = reader.take("kind", str, required=True)
    rule = None
    try:
        if kind == "cap_count":
            rule = CapCount(reader.take("count", int, default=1, required=True))
        elif kind == "min_source_weight":
            rule = MinSourceWeight(reader.take("threshold", float, default=0.0, required=True))
        elif kind == "max_age":
            rule = MaxAge(reader.take("age", int, default=0, required=True))
        elif kind == "overload_cap":
            trigger = reader.take("trigger", int, default=1, required=True)
            cap = reader.take("cap", int, default=1, required=True)
            rule = OverloadCap(trigger, cap)
        elif kind is not None:
            reader.error("kind", f"unknown rule kind {kind!r}")
    except InvariantViolation as exc:
        reader.error("kind", str(exc))
    reader.finish()
    return rule


def _parse_engine(table: dict, errors: list[str]) -> EngineConfig:
    reader = _Reader(table, "engine", errors)
    kind = _parse_enum(reader, "kind", EngineKind, EngineKind.WEIGHTED_MEAN)
    decay = reader.take("decay", float, default=None)
    default_score = reader.take("default_score", float, default=0.5)
    learning_rate = reader.take("learning_rate", float, default=0.2)
    reader.finish()
    try:
        return EngineConfig(kind, decay, default_score, learning_rate)
    except InvariantViolation as exc:
        errors.append(f"engine: {exc}")
        return EngineConfig()


def _parse_schedule(raw, where: str, errors: list[str]) -> tuple[tuple[int, float], ...]:
    if not isinstance(raw, list) or not raw:
        errors.append(f"{where}: expected a non-empty array of [start, quality] pairs")
        return ((0, 0.5),)
    pieces = []
    for item in raw:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not isinstance(item[0], int)
            or isinstance(item[0], bool)
            or not isinstance(item[1], (int, float))
            or isinstance(item[1], bool)
        ):
            errors.append(f"{where}: each piece must be [start, quality], got {item!r}")
            return ((0, 0.5),)
        pieces.append((item[0], float(item[1])))
    return tuple(pieces)


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document. Raises
    :class:`ScenarioValidationError` carrying every problem found."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioValidationError([f"syntax error: {exc}"]) from exc

    errors: list[str] = []
    top = _Reader(doc, "", errors)

    iterations = top.take("iterations", int, default=0, required=True)
    seed = top.take("seed", int, default=0)
    p_active = top.take("p_active", float, default=DEFAULT_P_ACTIVE)
    dim = top.take("preference_dimension", int, default=DEFAULT_PREFERENCE_DIMENSION)
    cache_ttl = top.take("cache_ttl", int, default=0)
    list_size = top.take("recommender_list_size", int, default=DEFAULT_RECOMMENDER_LIST_SIZE)
    feedback_noise = top.take("feedback_noise", float, default=0.0)
    warmup = top.take("warmup", int, default=None)
    monitored_rp = top.take("monitored_rp", str, default=None)

    engine_table = top.take("engine", dict, default=None)
    engine = _parse_engine(engine_table, errors) if engine_table is not None else EngineConfig()

    rules = []
    for i, table in enumerate(top.take_tables("rule")):
        rule = _parse_rule(table, i, errors)
        if rule is not None:
            rules.append(rule)

    providers = []
    for i, table in enumerate(top.take_tables("provider")):
        reader = _Reader(table, f"provider[{i}]", errors)
        pid = reader.take("id", str, default=f"op{i}", required=True)
        behavior = _parse_provider_behavior(reader)
        reader.finish()
        providers.append(ProviderDecl(pid, behavior))

    groups = []
    default_provider = providers[0].id if providers else ""
    for i, table in enumerate(top.take_tables("user_group")):
        reader = _Reader(table, f"user_group[{i}]", errors)
        count = reader.take("count", int, default=1, required=True)
        behavior = _parse_enum(reader, "behavior", UserBehavior, UserBehavior.NORMAL)
        provider = reader.take("provider", str, default=default_provider)
        prefs_raw = reader.table.pop("preferences", "uniform")
        if prefs_raw == "uniform":
            prefs = None
        elif isinstance(prefs_raw, list) and all(
            isinstance(c, (int, float)) and not isinstance(c, bool) for c in prefs_raw
        ):
            prefs = tuple(float(c) for c in prefs_raw)
        else:
            reader.error("preferences", f'expected "uniform" or a vector, got {prefs_raw!r}')
            prefs = None
        reader.finish()
        groups.append(UserGroup(count, behavior, provider, prefs))

    rps = []
    for i, table in enumerate(top.take_tables("relying_party")):
        reader = _Reader(table, f"relying_party[{i}]", errors)
        rid = reader.take("id", str, default=f"rp{i}", required=True)
        behavior = _parse_rp_behavior(reader)
        noise = reader.take("noise", float, default=None)
        services = []
        for j, svc_table in enumerate(reader.take_tables("service")):
            svc_reader = _Reader(svc_table, f"relying_party[{i}].service[{j}]", errors)
            sid = svc_reader.take("id", str, default=f"svc{j}", required=True)
            raw_schedule = svc_reader.table.pop("schedule", None)
            if raw_schedule is None:
                schedule = ((0, 0.5),)
            else:
                schedule = _parse_schedule(
                    raw_schedule, f"relying_party[{i}].service[{j}].schedule", errors
                )
            svc_reader.finish()
            services.append(ServiceDecl(sid, schedule))
        if not services:
            services = [ServiceDecl(*DEFAULT_SERVICE)]
        reader.finish()
        rps.append(RelyingPartyDecl(rid, behavior, tuple(services), noise))

    top.finish()

    scenario = Scenario(
        iterations=iterations,
        seed=seed,
        p_active=p_active,
        preference_dimension=dim,
        engine=engine,
        rules=tuple(rules),
        cache_ttl=cache_ttl,
        recommender_list_size=list_size,
        feedback_noise=feedback_noise,
        warmup=warmup,
        monitored_rp=monitored_rp,
        users=tuple(groups),
        providers=tuple(providers),
        relying_parties=tuple(rps),
    )
    errors.extend(scenario.validation_errors())
    if errors:
        raise ScenarioValidationError(errors)
    return scenario
