"""Univariate fitting and sampling for the traffic model.

Four families are used:

* exponential gaps between session arrivals (a Poisson arrival process),
* Zeta (discrete power law with ``x_min = 1``) session lengths,
* lognormal gaps between requests inside a session,
* categorical choices (robots, subdirectories, types, resources).

Samplers take an explicit :class:`numpy.random.Generator`; a given generator
state always produces the same draws.  Each sampler accepts ``size`` to draw
a whole array at once; ``size=None`` returns a scalar.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar

from ._validation import check_positive_scalar, check_probability_vector, check_samples
from .exceptions import AllOnes, DomainError, EmptySample, NonPositiveDuration

ZETA_S_MIN = 1.0 + 1e-6
ZETA_S_MAX = 50.0
# saturation value for Zeta draws that do not fit in int64
ZETA_MAX_DRAW = 9_223_372_036_854_774_784

# Euler-Maclaurin: B_{2k} / (2k)!  for k = 1..7
_BERNOULLI_TERMS = np.array([
    1 / 6 / 2,
    -1 / 30 / 24,
    1 / 42 / 720,
    -1 / 30 / 40320,
    5 / 66 / 3628800,
    -691 / 2730 / 479001600,
    7 / 6 / 87178291200,
])
_EM_TERMS = 12


# -- parameter types --------------------------------------------------------

@dataclass(frozen=True)
class ExponentialParams:
    """Rate of the exponential inter-session gap, in 1/seconds."""

    rate: float

    def __post_init__(self):
        check_positive_scalar(self.rate, "rate")

    @property
    def mean(self):
        return 1.0 / self.rate

    def cdf(self, x):
        return -np.expm1(-self.rate * np.maximum(np.asarray(x, dtype=float), 0.0))


@dataclass(frozen=True)
class ZetaParams:
    s: float

    def __post_init__(self):
        if not (isinstance(self.s, (int, float)) and math.isfinite(self.s) and self.s > 1):
            raise DomainError(f"Zeta exponent must be finite and > 1, got {self.s}")

    def pmf(self, k):
        k = np.asarray(k, dtype=float)
        return np.where(k >= 1, np.floor(k) ** -self.s, 0.0) / riemann_zeta(self.s)

    def cdf(self, k):
        """P(K <= k), via the tail sum beyond ``floor(k)``."""
        k = np.floor(np.asarray(k, dtype=float))
        out = np.zeros(k.shape)
        pos = k >= 1
        if np.any(pos):
            tail = _zeta_from(self.s, k[pos] + 1.0)
            out[pos] = 1.0 - tail / riemann_zeta(self.s)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class LognormalParams:
    """Parameters of ``log X ~ Normal(mu, sigma**2)``, in log-seconds."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")

    def cdf(self, x):
        from scipy.special import ndtr

        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            logx = np.log(np.where(x > 0, x, 0.0))
        if self.sigma == 0:
            return (logx >= self.mu).astype(float)
        return ndtr((logx - self.mu) / self.sigma)


@dataclass(frozen=True, eq=False)
class CategoricalParams:
    """Probabilities of a single-trial multinomial."""

    probs: np.ndarray

    def __post_init__(self):
        p = check_probability_vector(self.probs)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return len(self.probs)

    def __eq__(self, other):
        return isinstance(other, CategoricalParams) and np.array_equal(self.probs, other.probs)

    @cached_property
    def cdf(self):
        c = np.cumsum(self.probs)
        # guard against rounding leaving the last step below 1
        c[np.flatnonzero(self.probs)[-1]:] = 1.0
        return c

    @cached_property
    def _cdf_list(self):
        return self.cdf.tolist()

    @classmethod
    def from_weights(cls, weights) -> "CategoricalParams":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum())


# -- Riemann zeta -------------------------------------------------------------

def _zeta_from(s, a):
    """Sum of ``n**-s`` for integers ``n >= a`` (elementwise in ``a``)."""
    a = np.asarray(a, dtype=float)
    n = a[..., None] + np.arange(_EM_TERMS)
    head = np.sum(n ** -s, axis=-1)
    N = a + _EM_TERMS
    tail = N ** (1 - s) / (s - 1) + 0.5 * N ** -s
    # rising factorial s (s+1) ... (s+2k-2) times N**(-s-2k+1)
    term = s * N ** (-s - 1)
    for k, b in enumerate(_BERNOULLI_TERMS, start=1):
        tail = tail + b * term
        term = term * (s + 2 * k - 1) * (s + 2 * k) / (N * N)
    return head + tail


def riemann_zeta(s):
    """Riemann zeta function for real ``s > 1``.

    Twelve explicit terms plus an Euler-Maclaurin tail with seven Bernoulli
    corrections; accurate to a few ulps over the whole domain.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 1)):
        raise DomainError(f"zeta(s) requires s > 1, got {s}")
    if s_arr.ndim == 0:
        return float(_zeta_from(float(s_arr), 1.0))
    return np.array([_zeta_from(v, 1.0) for v in s_arr.ravel()]).reshape(s_arr.shape)


# -- fitting ------------------------------------------------------------------

def fit_poisson_rate(num_sessions, duration) -> ExponentialParams:
    """Maximum-likelihood arrival rate: sessions per second of observation."""
    if num_sessions < 1:
        raise EmptySample("no sessions observed")
    if not (duration > 0) or not math.isfinite(duration):
        raise NonPositiveDuration(f"duration must be positive, got {duration}")
    return ExponentialParams(num_sessions / duration)


def zeta_log_likelihood(s, samples):
    x = check_samples(samples, integer=True)
    return -x.size * math.log(riemann_zeta(s)) - s * np.log(x).sum()


def fit_zeta(samples) -> ZetaParams:
    """Maximum-likelihood exponent of a Zeta distribution with ``x_min = 1``.

    The log-likelihood depends on the data only through ``n`` and
    ``sum(log x)`` and is strictly concave in ``s``, so a bounded scalar
    search over ``(1, 50]`` finds the unique maximizer.

    Raises
    ------
    EmptySample
        ``samples`` is empty.
    AllOnes
        Every sample equals 1, so the likelihood increases without bound.
    """
    x = check_samples(samples, integer=True)
    if np.any(x < 1):
        raise ValueError("Zeta samples must be positive integers")
    if np.all(x == 1):
        raise AllOnes("all samples equal 1; the exponent estimate diverges")
    mean_log = float(np.log(x).mean())

    def neg_ll(s):
        return math.log(riemann_zeta(s)) + s * mean_log

    res = minimize_scalar(
        neg_ll, bounds=(ZETA_S_MIN, ZETA_S_MAX), method="bounded",
        options={"xatol": 1e-8, "maxiter": 500},
    )
    return ZetaParams(float(res.x))


def fit_lognormal(samples) -> LognormalParams:
    """Mean and (n-1)-normalized standard deviation of ``log(samples)``."""
    x = check_samples(samples, min_size=2, positive=True)
    logs = np.log(x)
    mu = float(logs.mean())
    sigma = float(logs.std(ddof=1))
    # identical samples can leave rounding residue
    if np.all(logs == logs[0]):
        sigma = 0.0
    return LognormalParams(mu, sigma)


def fit_categorical(counts) -> CategoricalParams:
    return CategoricalParams.from_weights(counts)


# -- sampling -----------------------------------------------------------------

def _uniform_open_closed(rng, size):
    # 1 - [0, 1) is (0, 1]
    return 1.0 - rng.random(size)


def sample_exponential(rng, params: ExponentialParams, size=None):
    """Inversion sampling: ``-ln(U) / rate`` with ``U`` uniform on (0, 1]."""
    u = _uniform_open_closed(rng, size)
    return -np.log(u) / params.rate


def sample_lognormal(rng, params: LognormalParams, size=None):
    return np.exp(params.mu + params.sigma * rng.standard_normal(size))


def sample_zeta(rng, params: ZetaParams, size=None):
    """Exact Zeta draws by rejection from a Pareto envelope.

    Devroye's algorithm for the Zipf distribution: propose
    ``X = floor(U**(-1/(s-1)))`` and accept with probability proportional to
    the ratio of the Zeta mass to the envelope.  The acceptance rate stays
    above ~0.5 for every ``s > 1``.  Draws beyond the int64 range saturate
    at :data:`ZETA_MAX_DRAW`.
    """
    a1 = params.s - 1.0
    b = 2.0 ** a1
    if size is None:
        return _sample_zeta_scalar(rng, a1, b)
    n = int(np.prod(size))
    out = np.empty(n, dtype=np.int64)
    filled = 0
    while filled < n:
        m = max(16, int(1.3 * (n - filled)))
        u = _uniform_open_closed(rng, m)
        v = rng.random(m)
        with np.errstate(over="ignore"):
            x = np.floor(np.exp(np.minimum(-np.log(u) / a1, 700.0)))
        x = np.minimum(x, float(ZETA_MAX_DRAW))
        # v * x * (t - 1) / (b - 1) <= t / b, with t - 1 computed stably
        tm1 = np.expm1(a1 * np.log1p(1.0 / x))
        accept = v * x * tm1 / np.expm1(a1 * math.log(2.0)) <= (1.0 + tm1) / b
        got = x[accept].astype(np.int64)
        take = min(got.size, n - filled)
        out[filled:filled + take] = got[:take]
        filled += take
    return out.reshape(size)


def _sample_zeta_scalar(rng, a1, b):
    bm1 = math.expm1(a1 * math.log(2.0))
    while True:
        u, v = 1.0 - rng.random(), rng.random()
        x = math.floor(math.exp(min(-math.log(u) / a1, 700.0)))
        x = min(x, ZETA_MAX_DRAW)
        tm1 = math.expm1(a1 * math.log1p(1.0 / x))
        if v * x * tm1 / bm1 <= (1.0 + tm1) / b:
            return int(x)


def sample_categorical(rng, params: CategoricalParams, size=None):
    """Index ``i`` with probability ``params.probs[i]``.

    Zero-probability indices are never returned.
    """
    if size is None:
        # bisect on a list beats numpy dispatch for single draws
        return bisect.bisect_right(params._cdf_list, rng.random())
    return np.searchsorted(params.cdf, rng.random(size), side="right")


# -- empirical distributions -------------------------------------------------

class EmpiricalCdf:
    """Right-continuous step CDF of a sample: ``F(x) = #{x_i <= x} / n``."""

    def __init__(self, samples):
        values = np.sort(check_samples(samples))
        values.setflags(write=False)
        self.sorted_values = values

    def __len__(self):
        return self.sorted_values.size

    def __call__(self, x):
        res = np.searchsorted(self.sorted_values, x, side="right") / self.sorted_values.size
        return float(res) if np.ndim(res) == 0 else res

    def points(self):
        """Distinct sample values and the CDF value at each."""
        xs, counts = np.unique(self.sorted_values, return_counts=True)
        return xs, np.cumsum(counts) / self.sorted_values.size


def empirical_cdf(samples) -> EmpiricalCdf:
    return EmpiricalCdf(samples)


def ks_statistic(samples, reference_cdf) -> float:
    """Kolmogorov-Smirnov distance between a sample and a reference CDF.

    Evaluated at every sample point from both sides of the empirical jump.
    """
    x = np.sort(check_samples(samples))
    n = x.size
    f = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


def ks_2samp_statistic(a, b) -> float:
    """Two-sample KS distance ``sup |F_a - F_b|``."""
    a = np.sort(check_samples(a, name="a"))
    b = np.sort(check_samples(b, name="b"))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))
