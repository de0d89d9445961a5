import pytest
from hypothesis import given
from hypothesis import strategies as st

from repsim.model import (
    ConfigurationError,
    EntityId,
    EntityKind,
    InvariantViolation,
    QoSProfile,
    RecommendationRecord,
    SourceWeight,
    neutral_prefs,
    preference_similarity,
    qos_at,
    validate_prefs,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


def vectors(dim):
    return st.lists(unit, min_size=dim, max_size=dim).map(tuple)


class TestEntityId:
    def test_orders_by_kind_then_ordinal_then_incarnation(self):
        ids = [
            EntityId(EntityKind.PROVIDER, 0),
            EntityId(EntityKind.USER, 3),
            EntityId(EntityKind.USER, 0, 1),
            EntityId(EntityKind.USER, 0),
        ]
        ordered = sorted(ids, key=EntityId.sort_key)
        assert ordered == [
            EntityId(EntityKind.USER, 0),
            EntityId(EntityKind.USER, 0, 1),
            EntityId(EntityKind.USER, 3),
            EntityId(EntityKind.PROVIDER, 0),
        ]

    def test_next_incarnation_keeps_actor(self):
        pid = EntityId(EntityKind.PROVIDER, 2)
        bumped = pid.next_incarnation()
        assert bumped == EntityId(EntityKind.PROVIDER, 2, 1)
        assert str(bumped) == "provider:2#1"
        assert str(pid) == "provider:2"

    def test_rejects_negative_fields(self):
        with pytest.raises(InvariantViolation):
            EntityId(EntityKind.USER, -1)
        with pytest.raises(InvariantViolation):
            EntityId(EntityKind.USER, 0, -2)


class TestQoS:
    def test_constant_schedule(self):
        profile = QoSProfile({"svc": ((0, 0.8),)})
        assert qos_at(profile, "svc", 500) == 0.8

    def test_step_schedule_is_right_continuous(self):
        profile = QoSProfile({"svc": ((0, 0.9), (50, 0.3))})
        assert qos_at(profile, "svc", 49) == 0.9
        assert qos_at(profile, "svc", 50) == 0.3
        assert qos_at(profile, "svc", 51) == 0.3

    def test_unknown_service_names_the_service(self):
        profile = QoSProfile({"svc": ((0, 0.8),)})
        with pytest.raises(ConfigurationError, match="other"):
            qos_at(profile, "other", 0)

    def test_rejects_bad_schedules(self):
        with pytest.raises(InvariantViolation):
            QoSProfile({"svc": ()})
        with pytest.raises(InvariantViolation):
            QoSProfile({"svc": ((5, 0.8),)})
        with pytest.raises(InvariantViolation):
            QoSProfile({"svc": ((0, 0.8), (10, 0.5), (10, 0.2))})
        with pytest.raises(InvariantViolation):
            QoSProfile({"svc": ((0, 1.2),)})
        with pytest.raises(InvariantViolation):
            QoSProfile({"svc": ((0, 0.5),)}, noise=0.6)

    @given(st.integers(min_value=0, max_value=2000))
    def test_values_stay_in_range(self, t):
        profile = QoSProfile({"svc": ((0, 0.9), (100, 0.0), (700, 1.0))})
        assert 0.0 <= qos_at(profile, "svc", t) <= 1.0


class TestPreferenceSimilarity:
    def test_identical_vectors_give_exactly_one(self):
        assert preference_similarity((0.3, 0.7), (0.3, 0.7)) == 1.0

    def test_maximal_distance_gives_zero(self):
        assert preference_similarity((0.0, 0.0), (1.0, 1.0)) == 0.0

    def test_hand_computed_example(self):
        # 1 - (|0.2-0.4| + |0.6-0.2|) / 2 = 1 - 0.6/2
        assert preference_similarity((0.2, 0.6), (0.4, 0.2)) == pytest.approx(0.7)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(InvariantViolation):
            preference_similarity((0.1,), (0.1, 0.2))

    @given(vectors(3), vectors(3))
    def test_symmetric_and_bounded(self, a, b):
        s = preference_similarity(a, b)
        assert s == preference_similarity(b, a)
        assert 0.0 <= s <= 1.0

    @given(vectors(4))
    def test_self_similarity_is_one(self, a):
        assert preference_similarity(a, a) == 1.0

    @given(vectors(2), vectors(2))
    def test_one_only_for_equal_vectors(self, a, b):
        # Sub-epsilon differences round away; only visible gaps must break
        # the similarity-one case.
        if max(abs(x - y) for x, y in zip(a, b)) >= 1e-9:
            assert preference_similarity(a, b) < 1.0


class TestRecordsAndWeights:
    def test_validate_prefs(self):
        assert validate_prefs([0.1, 0.9]) == (0.1, 0.9)
        assert neutral_prefs(3) == (0.5, 0.5, 0.5)
        with pytest.raises(InvariantViolation):
            validate_prefs([])
        with pytest.raises(InvariantViolation):
            validate_prefs([1.2])
        with pytest.raises(InvariantViolation):
            validate_prefs([0.5], dim=2)

    def test_record_invariants(self):
        rp = EntityId(EntityKind.RELYING_PARTY, 0)
        user = EntityId(EntityKind.USER, 1)
        record = RecommendationRecord(user, rp, "svc", 0.4, (0.5,), 3)
        assert record.value == 0.4
        with pytest.raises(InvariantViolation):
            RecommendationRecord(user, rp, "svc", 1.4, (0.5,), 0)
        with pytest.raises(InvariantViolation):
            RecommendationRecord(rp, rp, "svc", 0.4, (0.5,), 0)
        with pytest.raises(InvariantViolation):
            RecommendationRecord(user, user, "svc", 0.4, (0.5,), 0)
        with pytest.raises(InvariantViolation):
            RecommendationRecord(user, rp, "svc", 0.4, (0.5,), -1)

    def test_source_weight_invariants(self):
        provider = EntityId(EntityKind.PROVIDER, 0)
        user = EntityId(EntityKind.USER, 0)
        assert SourceWeight(provider, user, 0.5).weight == 0.5
        with pytest.raises(InvariantViolation):
            SourceWeight(user, provider, 0.5)
        with pytest.raises(InvariantViolation):
            SourceWeight(provider, user, 1.5)
