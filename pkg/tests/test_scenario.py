from pathlib import Path

import pytest

from repsim.behaviors import ProviderKind, RelyingPartyKind, UserBehavior
from repsim.engines import CapCount, EngineKind, MaxAge, MinSourceWeight, OverloadCap
from repsim.scenario import (
    ProviderDecl,
    RelyingPartyDecl,
    Scenario,
    ScenarioValidationError,
    UserGroup,
    parse_scenario,
)

MINIMAL = """
iterations = 10

[[provider]]
id = "op1"

[[user_group]]
count = 1

[[relying_party]]
id = "rp1"
"""

FULL = """
iterations = 500
seed = 42
p_active = 0.4
preference_dimension = 3
cache_ttl = 5
recommender_list_size = 4
feedback_noise = 0.05
warmup = 100
monitored_rp = "shop"

[engine]
kind = "time_decay_weighted_mean"
decay = 0.9
default_score = 0.5
learning_rate = 0.25

[[rule]]
kind = "min_source_weight"
threshold = 0.2

[[rule]]
kind = "cap_count"
count = 25

[[rule]]
kind = "max_age"
age = 50

[[rule]]
kind = "overload_cap"
trigger = 100
cap = 30

[[provider]]
id = "op1"
behavior = "normal"

[[provider]]
id = "op2"
behavior = "camouflaged_negative"
camouflage_pct = 30.0

[[provider]]
id = "op3"
behavior = "sybil_positive"
sybil_period = 100

[[user_group]]
count = 10
behavior = "normal"
provider = "op1"
preferences = "uniform"

[[user_group]]
count = 2
behavior = "negative_rater"
provider = "op2"
preferences = [0.1, 0.5, 0.9]

[[relying_party]]
id = "shop"
behavior = "sybil"
sybil_period = 200
noise = 0.1

[[relying_party.service]]
id = "main"
schedule = [[0, 0.9], [250, 0.3]]

[[relying_party.service]]
id = "side"
schedule = [[0, 0.5]]

[[relying_party]]
id = "other"
behavior = "not_participative"
"""


def errors_of(text):
    with pytest.raises(ScenarioValidationError) as exc_info:
        parse_scenario(text)
    return exc_info.value.errors


class TestParsing:
    def test_minimal_document_fills_defaults(self):
        sc = parse_scenario(MINIMAL)
        assert sc.iterations == 10
        assert sc.seed == 0
        assert sc.p_active == 0.3
        assert sc.preference_dimension == 2
        assert sc.cache_ttl == 0
        assert sc.recommender_list_size == 2
        assert sc.engine.kind is EngineKind.WEIGHTED_MEAN
        assert sc.engine.default_score == 0.5
        assert sc.rules == ()
        assert sc.users[0].provider == "op1"
        assert sc.users[0].behavior is UserBehavior.NORMAL
        assert sc.users[0].preferences is None
        assert sc.relying_parties[0].services[0].schedule == ((0, 0.5),)

    def test_full_document(self):
        sc = parse_scenario(FULL)
        assert sc.engine.kind is EngineKind.TIME_DECAY_WEIGHTED_MEAN
        assert sc.engine.decay == 0.9
        assert sc.rules == (
            MinSourceWeight(0.2), CapCount(25), MaxAge(50), OverloadCap(100, 30),
        )
        assert sc.providers[1].behavior.kind is ProviderKind.CAMOUFLAGED_NEGATIVE
        assert sc.providers[1].behavior.camouflage_pct == 30.0
        assert sc.providers[2].behavior.sybil_period == 100
        assert sc.users[1].preferences == (0.1, 0.5, 0.9)
        assert sc.relying_parties[0].behavior.kind is RelyingPartyKind.SYBIL
        assert sc.relying_parties[0].services[0].schedule == ((0, 0.9), (250, 0.3))
        assert sc.relying_parties[0].noise == 0.1
        assert sc.monitored_index() == 0
        assert sc.warmup_iterations() == 100

    def test_syntax_error_reports_line_and_column(self):
        errors = errors_of("iterations = [\nbroken = 2\n")
        assert len(errors) == 1
        assert "syntax error" in errors[0]
        assert "line 2" in errors[0] and "column" in errors[0]

    def test_out_of_range_camouflage_names_the_field(self):
        text = MINIMAL + """
[[provider]]
id = "op2"
behavior = "camouflaged_positive"
camouflage_pct = 130.0
"""
        errors = errors_of(text)
        assert any("camouflage_pct" in e and "130" in e for e in errors)

    def test_dangling_provider_reference(self):
        text = """
iterations = 10

[[provider]]
id = "op1"

[[user_group]]
count = 1
provider = "opX"

[[relying_party]]
id = "rp1"
"""
        errors = errors_of(text)
        assert any("opX" in e and "undefined" in e for e in errors)

    def test_duplicate_ids(self):
        text = MINIMAL + """
[[provider]]
id = "op1"
"""
        errors = errors_of(text)
        assert any("duplicate" in e and "op1" in e for e in errors)

    def test_all_errors_are_collected(self):
        text = """
iterations = -5
p_active = 1.5

[[provider]]
id = "op1"

[[user_group]]
count = 0
provider = "ghost"

[[relying_party]]
id = "rp1"
noise = 0.9
"""
        errors = errors_of(text)
        joined = "\n".join(errors)
        assert "iterations" in joined
        assert "p_active" in joined
        assert "count" in joined
        assert "ghost" in joined
        assert "noise" in joined
        assert len(errors) >= 5

    def test_unknown_keys_are_rejected(self):
        errors = errors_of(MINIMAL + "\ntypo_key = 1\n")
        assert any("typo_key" in e and "unknown key" in e for e in errors)

    def test_unknown_behavior_lists_alternatives(self):
        text = MINIMAL.replace('id = "op1"', 'id = "op1"\nbehavior = "sneaky"')
        errors = errors_of(text)
        assert any("sneaky" in e and "normal" in e for e in errors)

    def test_missing_iterations_is_required(self):
        errors = errors_of("[[provider]]\nid = \"op1\"\n[[user_group]]\ncount = 1\n[[relying_party]]\nid = \"rp1\"\n")
        assert any("iterations" in e and "missing" in e for e in errors)

    def test_bad_schedule_shapes(self):
        text = MINIMAL.replace(
            'id = "rp1"',
            'id = "rp1"\n[[relying_party.service]]\nid = "svc"\nschedule = [[5, 0.5]]',
        )
        errors = errors_of(text)
        assert any("start at iteration 0" in e for e in errors)

    def test_sybil_period_required_for_sybil_rp(self):
        text = MINIMAL.replace('id = "rp1"', 'id = "rp1"\nbehavior = "sybil"')
        errors = errors_of(text)
        assert any("sybil_period" in e for e in errors)


class TestCanonicalForm:
    def test_minimal_round_trip(self):
        sc = parse_scenario(MINIMAL)
        assert parse_scenario(sc.canonical_text()) == sc

    def test_full_round_trip(self):
        sc = parse_scenario(FULL)
        assert parse_scenario(sc.canonical_text()) == sc

    def test_canonical_text_is_stable(self):
        sc = parse_scenario(FULL)
        assert sc.canonical_text() == sc.canonical_text()
        assert parse_scenario(sc.canonical_text()).canonical_text() == sc.canonical_text()

    def test_fingerprint_covers_seed(self):
        sc = parse_scenario(MINIMAL)
        assert sc.fingerprint(7) != sc.fingerprint(8)
        assert sc.fingerprint(7) == sc.fingerprint(7)

    def test_fingerprint_is_stable_for_identical_inputs(self):
        # Frozen value: guards against accidental canonical-form drift.
        sc = parse_scenario(MINIMAL)
        assert sc.fingerprint(0) == parse_scenario(MINIMAL).fingerprint(0)
        assert len(sc.fingerprint(0)) == 64

    def test_distinct_scenarios_have_distinct_hashes(self):
        a = parse_scenario(MINIMAL)
        b = parse_scenario(MINIMAL.replace("iterations = 10", "iterations = 11"))
        assert a.content_hash() != b.content_hash()


class TestBundledScenarios:
    def test_bundled_scenarios_are_valid(self):
        root = Path(__file__).resolve().parent.parent / "scenarios"
        paths = sorted(root.glob("*.toml"))
        assert paths, "no bundled scenarios found"
        for path in paths:
            sc = parse_scenario(path.read_text(encoding="utf-8"))
            assert parse_scenario(sc.canonical_text()) == sc


class TestProgrammaticValidation:
    def test_referential_integrity(self):
        sc = Scenario(
            iterations=5,
            users=(UserGroup(1, UserBehavior.NORMAL, "nope"),),
            providers=(ProviderDecl("op1"),),
            relying_parties=(RelyingPartyDecl("rp1"),),
            monitored_rp="missing",
        )
        errors = sc.validation_errors()
        assert any("nope" in e for e in errors)
        assert any("missing" in e for e in errors)

    def test_entity_minimums(self):
        errors = Scenario(iterations=5).validation_errors()
        joined = "\n".join(errors)
        assert "user group" in joined
        assert "provider" in joined
        assert "relying party" in joined

    def test_preference_dimension_mismatch(self):
        sc = Scenario(
            iterations=5,
            preference_dimension=3,
            users=(UserGroup(1, UserBehavior.NORMAL, "op1", (0.5, 0.5)),),
            providers=(ProviderDecl("op1"),),
            relying_parties=(RelyingPartyDecl("rp1"),),
        )
        assert any("preferences" in e for e in sc.validation_errors())

    def test_warmup_must_precede_end(self):
        sc = Scenario(
            iterations=5,
            warmup=5,
            users=(UserGroup(1, UserBehavior.NORMAL, "op1"),),
            providers=(ProviderDecl("op1"),),
            relying_parties=(RelyingPartyDecl("rp1"),),
        )
        assert any("warmup" in e for e in sc.validation_errors())
