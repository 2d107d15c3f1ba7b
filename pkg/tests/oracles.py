"""Independent reference computations used as test oracles."""
import warnings
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.special import zeta as scipy_zeta

ZETA_GRID_STEP = 1e-4


@lru_cache(maxsize=1)
def _zeta_grid():
    s = np.arange(1.001, 50.0 + ZETA_GRID_STEP / 2, ZETA_GRID_STEP)
    return s, np.log(scipy_zeta(s, 1))


def zeta_mle_grid(samples):
    """Maximizer of the exact Zeta log-likelihood over a 1e-4 grid on (1.001, 50]."""
    x = np.asarray(samples, dtype=float)
    s, log_z = _zeta_grid()
    ll = -x.size * log_z - s * np.log(x).sum()
    return float(s[np.argmax(ll)])


def dirichlet_mode_numeric(prior, counts):
    """Maximize sum((prior + counts - 1) * log(theta)) over the simplex with SLSQP."""
    w = np.asarray(prior, float) + np.asarray(counts, float) - 1.0
    k = w.size
    if k == 1:
        return np.ones(1)
    with warnings.catch_warnings():
        # SLSQP may step outside the bounds and clip; harmless here
        warnings.simplefilter("ignore", RuntimeWarning)
        res = _slsqp(w, k)
    return res.x / res.x.sum()


def _slsqp(w, k):
    return minimize(
        lambda t: -np.sum(w * np.log(np.maximum(t, 1e-300))),
        np.full(k, 1.0 / k),
        jac=lambda t: -w / np.maximum(t, 1e-300),
        method="SLSQP",
        bounds=[(1e-12, 1.0)] * k,
        constraints=[{"type": "eq", "fun": lambda t: t.sum() - 1.0, "jac": lambda t: np.ones(k)}],
        options={"ftol": 1e-15, "maxiter": 1000},
    )


def lru_reference(paths, capacity):
    """O(n * capacity) LRU: evict the entry with the oldest last use."""
    last_use = {}
    hits = []
    for t, p in enumerate(paths):
        if p in last_use:
            hits.append(True)
        else:
            hits.append(False)
            if len(last_use) >= capacity:
                del last_use[min(last_use, key=last_use.get)]
        last_use[p] = t
    return hits


def lfu_reference(paths, capacity):
    """O(n * capacity) LFU: evict the smallest (count, last use); counts reset on eviction."""
    state = {}
    hits = []
    for t, p in enumerate(paths):
        if p in state:
            hits.append(True)
            state[p] = (state[p][0] + 1, t)
        else:
            hits.append(False)
            if len(state) >= capacity:
                del state[min(state, key=state.get)]
            state[p] = (1, t)
    return hits


def pool_size_stabbing(sessions):
    """Mean over all requests of the number of sessions covering its time, rounded; O(n^2)."""
    times = [r.time for s in sessions for r in s.requests]
    spans = [(s.start_time, s.end_time) for s in sessions]
    counts = [sum(a <= t <= b for a, b in spans) for t in times]
    return max(1, int(round(sum(counts) / len(counts))))
