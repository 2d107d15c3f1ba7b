"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
from __future__ import annotations

import math
import numbers

import numpy as np

from .exceptions import EmptySample, NonPositiveSample, TooFewSamples


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Unlike sklearn's helper this always yields the new-style generator, and
    ``None`` is rejected: every random stream in the toolkit must be seeded.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise TypeError(f"expected an integer seed or numpy Generator, got {type(seed).__name__}")


def check_samples(x, *, min_size=1, positive=False, integer=False, name="samples"):
    """Return ``x`` as a 1-d float (or int) array after basic checks."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise EmptySample(f"{name} is empty")
    if arr.size < min_size:
        raise TooFewSamples(f"{name} needs at least {min_size} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if positive and np.any(arr <= 0):
        raise NonPositiveSample(f"{name} must be strictly positive")
    if integer:
        if np.any(arr != np.round(arr)):
            raise ValueError(f"{name} must be integers")
        arr = arr.astype(np.int64)
    return arr


def check_positive_scalar(value, name, *, allow_inf=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise TypeError(f"{name} must be a real number")
    if math.isnan(value) or value <= 0 or (math.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be positive{'' if allow_inf else ' and finite'}, got {value}")
    return float(value)


def check_probability_vector(p, *, atol=1e-9, name="probs"):
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty vector")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has negative or non-finite entries")
    if abs(arr.sum() - 1.0) > atol:
        raise ValueError(f"{name} sums to {arr.sum()!r}, not 1")
    return arr


def normalize(weights, *, name="weights"):
    """Scale nonnegative ``weights`` to sum to one."""
    arr = np.asarray(weights, dtype=np.float64)
    total = arr.sum()
    if arr.size == 0 or total <= 0 or np.any(arr < 0):
        raise ValueError(f"{name} must be nonnegative with positive sum")
    return arr / total
