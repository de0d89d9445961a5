"""Backend-level checks: the numpy reference implementations agree with
whatever backend is active, and the shared arithmetic honors its edge
cases (empty input, zero mass, all-equal exactness)."""

import numpy as np
import pytest

from repsim import kernels
from repsim.kernels import (
    ENGINE_TIME_DECAY,
    ENGINE_WEIGHTED_MEAN,
    NUMPY_FUNCS,
    no_rules,
)
from repsim.engines import CapCount, MaxAge, MinSourceWeight, OverloadCap, encode_rules


def random_batch(rng, k, d=3):
    values = rng.random(k)
    iters = np.sort(rng.integers(0, 50, size=k)).astype(np.int64)
    prefs = rng.random((k, d))
    weights = rng.random(k)
    query = rng.random(d)
    return values, iters, prefs, weights, query


RULE_SETS = [
    (),
    (CapCount(5),),
    (MinSourceWeight(0.4),),
    (MaxAge(10),),
    (OverloadCap(8, 4),),
    (MinSourceWeight(0.2), CapCount(7)),
    (CapCount(12), MaxAge(20), OverloadCap(6, 3)),
]


@pytest.mark.parametrize("rules", RULE_SETS)
def test_backends_agree(rules):
    rng = np.random.default_rng(99)
    codes, p1, p2 = encode_rules(rules)
    for k in (0, 1, 2, 7, 40, 300):
        values, iters, prefs, weights, query = random_batch(rng, k)
        for engine, lam in ((ENGINE_WEIGHTED_MEAN, 1.0), (ENGINE_TIME_DECAY, 0.9)):
            score, mask = kernels.score_request(
                values, iters, prefs, weights, query, codes, p1, p2,
                engine, lam, 60, 0.5,
            )
            ref_score, ref_mask = NUMPY_FUNCS["score_request"](
                values, iters, prefs, weights, query, codes, p1, p2,
                engine, lam, 60, 0.5,
            )
            assert np.array_equal(np.asarray(mask), ref_mask)
            assert score == pytest.approx(ref_score, abs=1e-12)


def test_empty_input_returns_default():
    codes, p1, p2 = no_rules()
    score, mask = kernels.score_request(
        np.empty(0), np.empty(0, np.int64), np.empty((0, 2)), np.empty(0),
        np.array([0.5, 0.5]), codes, p1, p2, ENGINE_WEIGHTED_MEAN, 1.0, 0, 0.25,
    )
    assert score == 0.25
    assert len(mask) == 0


def test_zero_mass_returns_default():
    values = np.array([0.9, 0.1])
    iters = np.zeros(2, np.int64)
    mask = np.ones(2, np.bool_)
    score = kernels.engine_score(
        values, np.zeros(2), np.ones(2), iters, mask,
        ENGINE_WEIGHTED_MEAN, 1.0, 0, 0.5,
    )
    assert score == 0.5


def test_all_equal_values_are_returned_bit_exactly():
    # The anchored formulation must not introduce summation noise.
    k = 37
    values = np.full(k, 0.8)
    iters = np.arange(k, dtype=np.int64)
    mask = np.ones(k, np.bool_)
    rng = np.random.default_rng(3)
    weights = rng.random(k)
    sims = rng.random(k) * 0.9 + 0.1
    for engine, lam in ((ENGINE_WEIGHTED_MEAN, 1.0), (ENGINE_TIME_DECAY, 0.7)):
        score = kernels.engine_score(values, weights, sims, iters, mask, engine, lam, k, 0.5)
        assert float(score) == 0.8


def test_masked_out_rows_do_not_contribute():
    values = np.array([0.0, 1.0])
    iters = np.zeros(2, np.int64)
    mask = np.array([False, True])
    score = kernels.engine_score(
        values, np.ones(2), np.ones(2), iters, mask,
        ENGINE_WEIGHTED_MEAN, 1.0, 0, 0.5,
    )
    assert float(score) == 1.0


def test_rule_mask_cap_keeps_most_recent_rows():
    iters = np.array([0, 1, 2, 3, 4], dtype=np.int64)
    weights = np.ones(5)
    codes, p1, p2 = encode_rules((CapCount(2),))
    mask = kernels.rule_mask(iters, weights, 4, codes, p1, p2)
    assert list(np.asarray(mask)) == [False, False, False, True, True]


def test_rule_mask_overload_only_fires_past_trigger():
    iters = np.arange(6, dtype=np.int64)
    weights = np.ones(6)
    codes, p1, p2 = encode_rules((OverloadCap(6, 2),))
    mask = kernels.rule_mask(iters, weights, 5, codes, p1, p2)
    assert np.asarray(mask).all()
    codes, p1, p2 = encode_rules((OverloadCap(5, 2),))
    mask = kernels.rule_mask(iters, weights, 5, codes, p1, p2)
    assert list(np.asarray(mask)) == [False] * 4 + [True] * 2


def test_env_flag_forces_numpy_backend():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from repsim import kernels; print(kernels.BACKEND)"],
        env={**__import__("os").environ, "ROMEO_SIM_NUMBA": "0"},
        capture_output=True, text=True, check=True,
    ).stdout.strip()
    assert out == "numpy"


def test_decay_one_matches_weighted_mean():
    rng = np.random.default_rng(11)
    values, iters, prefs, weights, query = random_batch(rng, 25)
    mask = np.ones(25, np.bool_)
    sims = kernels.similarities(prefs, query)
    plain = kernels.engine_score(values, weights, sims, iters, mask,
                                 ENGINE_WEIGHTED_MEAN, 1.0, 50, 0.5)
    decayed = kernels.engine_score(values, weights, sims, iters, mask,
                                   ENGINE_TIME_DECAY, 1.0, 50, 0.5)
    assert float(plain) == float(decayed)
