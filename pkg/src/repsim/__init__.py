"""repsim: a deterministic, scenario-driven simulator of a reputation
layer running on top of federated identity providers.

Users ask their identity provider how trustworthy a relying party is;
providers aggregate their own users' feedback with recommendations
gathered from other providers, weighting sources by accuracy and by
preference similarity. Scenarios script honest and adversarial behavior
so aggregation engines can be compared under attack.
"""

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
    WeightedInput,
    adjust_weight,
    apply_rules,
    time_decay_mean,
    weighted_mean,
)
from .kernels import BACKEND
from .metrics import (
    SimulationResult,
    SummaryStats,
    accuracy_series,
    results_series,
    satisfaction_series,
    summarize,
)
from .model import (
    ConfigurationError,
    EntityId,
    EntityKind,
    InvariantViolation,
    QoSProfile,
    RecommendationRecord,
    SourceWeight,
    preference_similarity,
    qos_at,
)
from .scenario import Scenario, ScenarioValidationError, parse_scenario
from .simulation import (
    gather,
    init_world,
    interact_and_feedback,
    request_reputation,
    run,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CapCount",
    "ConfigurationError",
    "EngineConfig",
    "EngineKind",
    "EntityId",
    "EntityKind",
    "InvariantViolation",
    "MaxAge",
    "MinSourceWeight",
    "OverloadCap",
    "ProviderBehavior",
    "ProviderKind",
    "QoSProfile",
    "RecommendationRecord",
    "RelyingPartyBehavior",
    "RelyingPartyKind",
    "Scenario",
    "ScenarioValidationError",
    "SimulationResult",
    "SourceWeight",
    "SummaryStats",
    "UserBehavior",
    "WeightedInput",
    "accuracy_series",
    "adjust_weight",
    "apply_rules",
    "gather",
    "init_world",
    "interact_and_feedback",
    "parse_scenario",
    "preference_similarity",
    "qos_at",
    "request_reputation",
    "results_series",
    "run",
    "satisfaction_series",
    "step",
    "summarize",
    "time_decay_mean",
    "weighted_mean",
]
