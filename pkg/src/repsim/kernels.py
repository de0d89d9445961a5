"""Numeric kernels behind the recommendation aggregation path.

Every reputation request scans a provider's accumulated record columns
(values, iterations, preference rows, weights), so these loops dominate
runtime. Two interchangeable backends implement identical arithmetic:

* plain numpy (always available), and
* numba ``@njit`` loops, compiled lazily and cached on disk.

The numba path is selected automatically when numba imports cleanly.
Setting the environment variable ``ROMEO_SIM_NUMBA`` to ``0``, ``false``,
``no`` or ``off`` forces the numpy fallback. ``BACKEND`` names the active
choice.

Array contracts: values/weights/sims are float64, iterations int64,
preference matrices C-contiguous float64 of shape (k, d), masks bool.
Rule arrays come from :func:`repsim.engines.encode_rules`. All rule logic
assumes rows are already in canonical order: ascending (iteration,
source sort key), so "most recent" means "last".
"""

from __future__ import annotations

import os

import numpy as np

ENGINE_WEIGHTED_MEAN = 0
ENGINE_TIME_DECAY = 1

RULE_CAP_COUNT = 0
RULE_MIN_SOURCE_WEIGHT = 1
RULE_MAX_AGE = 2
RULE_OVERLOAD_CAP = 3

_flag = os.environ.get("ROMEO_SIM_NUMBA", "").strip().lower()
_NUMBA_WANTED = _flag not in {"0", "false", "no", "off"}


# -- numpy backend -----------------------------------------------------

def _similarities_np(prefs: np.ndarray, query: np.ndarray) -> np.ndarray:
    if prefs.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    return 1.0 - np.abs(prefs - query[None, :]).mean(axis=1)


def _keep_last_np(mask: np.ndarray, n: int) -> None:
    idx = np.flatnonzero(mask)
    if idx.size > n:
        mask[idx[: idx.size - n]] = False


def _rule_mask_np(
    iters: np.ndarray,
    weights: np.ndarray,
    now: int,
    codes: np.ndarray,
    p1: np.ndarray,
    p2: np.ndarray,
) -> np.ndarray:
    mask = np.ones(iters.shape[0], dtype=np.bool_)
    for j in range(codes.shape[0]):
        code = codes[j]
        if code == RULE_CAP_COUNT:
            _keep_last_np(mask, int(p1[j]))
        elif code == RULE_MIN_SOURCE_WEIGHT:
            mask &= weights >= p1[j]
        elif code == RULE_MAX_AGE:
            mask &= (now - iters) <= p1[j]
        elif code == RULE_OVERLOAD_CAP:
            if int(mask.sum()) > int(p1[j]):
                _keep_last_np(mask, int(p2[j]))
    return mask


def _engine_score_np(
    values: np.ndarray,
    weights: np.ndarray,
    sims: np.ndarray,
    iters: np.ndarray,
    mask: np.ndarray,
    engine: int,
    lam: float,
    now: int,
    r0: float,
) -> float:
    c = weights * sims
    if engine == ENGINE_TIME_DECAY:
        c = c * lam ** (now - iters)
    c = np.where(mask, c, 0.0)
    den = float(np.sum(c))
    if den <= 0.0:
        return r0
    # Anchoring at the first kept value keeps all-equal inputs bit-exact.
    anchor = float(values[np.flatnonzero(mask)[0]])
    num = float(np.sum(c * (values - anchor)))
    score = anchor + num / den
    return 0.0 if score < 0.0 else (1.0 if score > 1.0 else score)


def _score_request_np(values, iters, prefs, weights, query, codes, p1, p2,
                      engine, lam, now, r0):
    sims = _similarities_np(prefs, query)
    mask = _rule_mask_np(iters, weights, now, codes, p1, p2)
    score = _engine_score_np(values, weights, sims, iters, mask, engine, lam, now, r0)
    return score, mask


# -- numba backend -----------------------------------------------------

_numba_ok = False
if _NUMBA_WANTED:
    try:
        from numba import njit as _njit

        _numba_ok = True
    except ImportError:
        _numba_ok = False

if _numba_ok:

    @_njit(cache=True)
    def _similarities_nb(prefs, query):  # pragma: no cover - numba
        k = prefs.shape[0]
        d = prefs.shape[1]
        out = np.empty(k, dtype=np.float64)
        for i in range(k):
            acc = 0.0
            for j in range(d):
                diff = prefs[i, j] - query[j]
                acc += -diff if diff < 0.0 else diff
            out[i] = 1.0 - acc / d
        return out

    @_njit(cache=True)
    def _keep_last_nb(mask, n):  # pragma: no cover - numba
        kept = 0
        for i in range(mask.shape[0] - 1, -1, -1):
            if mask[i]:
                if kept >= n:
                    mask[i] = False
                else:
                    kept += 1

    @_njit(cache=True)
    def _rule_mask_nb(iters, weights, now, codes, p1, p2):  # pragma: no cover
        k = iters.shape[0]
        mask = np.ones(k, dtype=np.bool_)
        for j in range(codes.shape[0]):
            code = codes[j]
            if code == 0:  # cap count
                _keep_last_nb(mask, int(p1[j]))
            elif code == 1:  # minimum source weight
                for i in range(k):
                    if mask[i] and weights[i] < p1[j]:
                        mask[i] = False
            elif code == 2:  # maximum age
                for i in range(k):
                    if mask[i] and (now - iters[i]) > p1[j]:
                        mask[i] = False
            elif code == 3:  # overload cap
                kept = 0
                for i in range(k):
                    if mask[i]:
                        kept += 1
                if kept > int(p1[j]):
                    _keep_last_nb(mask, int(p2[j]))
        return mask

    @_njit(cache=True)
    def _engine_score_nb(values, weights, sims, iters, mask, engine, lam, now, r0):  # pragma: no cover
        k = values.shape[0]
        den = 0.0
        anchor = 0.0
        found = False
        for i in range(k):
            if not mask[i]:
                continue
            if not found:
                anchor = values[i]
                found = True
            c = weights[i] * sims[i]
            if engine == 1:
                c *= lam ** (now - iters[i])
            den += c
        if den <= 0.0:
            return r0
        num = 0.0
        for i in range(k):
            if not mask[i]:
                continue
            c = weights[i] * sims[i]
            if engine == 1:
                c *= lam ** (now - iters[i])
            num += c * (values[i] - anchor)
        score = anchor + num / den
        return 0.0 if score < 0.0 else (1.0 if score > 1.0 else score)

    @_njit(cache=True)
    def _score_request_nb(values, iters, prefs, weights, query, codes, p1, p2,
                          engine, lam, now, r0):  # pragma: no cover - numba
        sims = _similarities_nb(prefs, query)
        mask = _rule_mask_nb(iters, weights, now, codes, p1, p2)
        score = _engine_score_nb(values, weights, sims, iters, mask, engine, lam, now, r0)
        return score, mask


# -- backend selection -------------------------------------------------

if _numba_ok:
    BACKEND = "numba"
    similarities = _similarities_nb
    rule_mask = _rule_mask_nb
    engine_score = _engine_score_nb
    score_request = _score_request_nb
else:
    BACKEND = "numpy"
    similarities = _similarities_np
    rule_mask = _rule_mask_np
    engine_score = _engine_score_np
    score_request = _score_request_np


NUMPY_FUNCS = {
    "similarities": _similarities_np,
    "rule_mask": _rule_mask_np,
    "engine_score": _engine_score_np,
    "score_request": _score_request_np,
}


def no_rules() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Encoded empty rule list."""
    return (
        np.empty(0, dtype=np.int64),
        np.empty(0, dtype=np.float64),
        np.empty(0, dtype=np.float64),
    )
