import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from repsim.model import EntityId, EntityKind, RecommendationRecord
from repsim.engines import WeightedInput

settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# Filled by the acceptance tests; echoed after the run so the per-criterion
# verdicts are visible without -s.
CRITERION_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)

RP = EntityId(EntityKind.RELYING_PARTY, 0)


def make_record(value, iteration=0, source_ordinal=0, source_kind=EntityKind.USER,
                prefs=(0.5, 0.5), subject=RP, service="svc"):
    return RecommendationRecord(
        source=EntityId(source_kind, source_ordinal),
        subject=subject,
        service=service,
        value=value,
        prefs=tuple(prefs),
        iteration=iteration,
    )


def make_input(value, weight=1.0, similarity=1.0, iteration=0, source_ordinal=0,
               source_kind=EntityKind.USER, prefs=(0.5, 0.5)):
    return WeightedInput(
        make_record(value, iteration, source_ordinal, source_kind, prefs),
        weight,
        similarity,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
