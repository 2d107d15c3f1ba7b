"""Which resource a robot requests next.

A request path is drawn in three steps:

1. a subdirectory, with probability proportional to the number of distinct
   resources catalogued in it;
2. a resource type (file extension) from the robot's type distribution for
   that subdirectory;
3. a resource of that type from the robot's resource distribution.

The per-robot distributions in steps 2 and 3 are MAP estimates under
Dirichlet priors whose means are the all-robot request frequencies in the
subdirectory.  They are computed lazily per (robot, subdirectory) pair since
most robots touch few subdirectories.
"""
from __future__ import annotations

import posixpath
from collections import Counter, defaultdict
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_scalar
from .distfit import CategoricalParams, sample_categorical
from .exceptions import EmptyCatalog, EmptyTrace, InconsistentCounts, UnknownSubdirectory, ZeroGlobalCounts

NO_TYPE = "none"
STRENGTH_MODES = ("constant", "data")


def normalize_path(path: str) -> str:
    """Drop the query string and fragment."""
    for sep in ("?", "#"):
        path = path.split(sep, 1)[0]
    return path or "/"


def split_path(path: str) -> tuple:
    """Return ``(subdirectory, type)`` of a request path.

    >>> split_path("/a/b/c.HTML")
    ('/a/b', 'html')
    >>> split_path("/x.gif")
    ('/', 'gif')
    >>> split_path("/a/b/")
    ('/a/b', 'none')
    """
    path = normalize_path(path)
    if path.endswith("/"):
        return (path.rstrip("/") or "/"), NO_TYPE
    subdir, name = posixpath.split(path)
    _, dot, ext = name.rpartition(".")
    return subdir or "/", ext.lower() if dot and ext else NO_TYPE


@dataclass(frozen=True)
class ResourceCatalog:
    """Resources seen in a trace, grouped by subdirectory then type.

    ``counts[subdir][type][path]`` is the global request count ``(n_G)``.
    Subdirectories, types and paths are kept in sorted order so every
    derived vector has a stable layout.
    """

    counts: Mapping

    @property
    def subdirectories(self) -> list:
        return list(self.counts)

    def types(self, subdir) -> list:
        return list(self._get(subdir))

    def resources(self, subdir, type_) -> list:
        return list(self._get(subdir)[type_])

    def _get(self, subdir):
        try:
            return self.counts[subdir]
        except KeyError:
            raise UnknownSubdirectory(subdir) from None

    def num_resources(self, subdir) -> int:
        return sum(len(v) for v in self._get(subdir).values())

    def type_counts(self, subdir) -> np.ndarray:
        """Global per-type request counts ``(m_G)_j``."""
        return np.array([sum(v.values()) for v in self._get(subdir).values()], dtype=float)

    def resource_counts(self, subdir) -> list:
        """Global per-resource counts ``(n_G)_{j,l}``, one array per type."""
        return [np.array(list(v.values()), dtype=float) for v in self._get(subdir).values()]

    def __contains__(self, path) -> bool:
        subdir, t = split_path(path)
        return normalize_path(path) in self.counts.get(subdir, {}).get(t, {})

    @property
    def paths(self) -> set:
        return {p for types in self.counts.values() for res in types.values() for p in res}

    def to_dict(self) -> dict:
        return {d: {t: dict(r) for t, r in types.items()} for d, types in self.counts.items()}

    @classmethod
    def from_dict(cls, d) -> "ResourceCatalog":
        return cls(_sorted_nested(d))


def _sorted_nested(raw) -> dict:
    return {
        d: {t: {p: int(raw[d][t][p]) for p in sorted(raw[d][t])} for t in sorted(raw[d])}
        for d in sorted(raw)
    }


def build_catalog(paths: Iterable[str]) -> ResourceCatalog:
    """Tally request paths into a catalog.

    ``paths`` may be a plain iterable of path strings or a Trace.
    """
    raw = defaultdict(lambda: defaultdict(Counter))
    n = 0
    for p in paths:
        p = getattr(p, "path", p)
        p = normalize_path(p)
        subdir, t = split_path(p)
        raw[subdir][t][p] += 1
        n += 1
    if n == 0:
        raise EmptyTrace("cannot build a catalog from an empty trace")
    return ResourceCatalog(_sorted_nested(raw))


@dataclass(frozen=True)
class SubdirectoryDist:
    subdirectories: tuple
    probs: CategoricalParams


def fit_subdirectory_dist(catalog: ResourceCatalog) -> SubdirectoryDist:
    """Subdirectory probabilities proportional to resource counts."""
    subdirs = catalog.subdirectories
    if not subdirs:
        raise EmptyCatalog("catalog has no subdirectories")
    r = np.array([catalog.num_resources(d) for d in subdirs], dtype=float)
    return SubdirectoryDist(tuple(subdirs), CategoricalParams(r / r.sum()))


@dataclass(frozen=True, eq=False)
class DirichletHyperparams:
    """Prior pseudo-counts for one subdirectory.

    ``alpha`` has one entry per type; ``gamma[j]`` one entry per resource
    of type ``j``.
    """

    alpha: np.ndarray
    gamma: tuple

    @property
    def alpha_strength(self) -> float:
        return float(self.alpha.sum())


def _proportional(strength, counts):
    total = counts.sum()
    return strength * counts / total


def fit_hyperparameters(catalog: ResourceCatalog, subdir, alpha_strength=1.0, gamma_strength=1.0,
                        mode="constant") -> DirichletHyperparams:
    """Dirichlet hyperparameters proportional to global request counts.

    With ``mode="constant"`` the strengths are used as given.  With
    ``mode="data"`` each strength is replaced by the number of global
    observations behind it (requests in the subdirectory for the type prior,
    requests of that type for each resource prior), which makes the
    pseudo-counts equal the global counts.
    """
    if mode not in STRENGTH_MODES:
        raise ValueError(f"mode must be one of {STRENGTH_MODES}")
    check_positive_scalar(alpha_strength, "alpha_strength")
    check_positive_scalar(gamma_strength, "gamma_strength")
    m_g = catalog.type_counts(subdir)
    n_g = catalog.resource_counts(subdir)
    if m_g.sum() <= 0:
        raise ZeroGlobalCounts(f"no requests recorded in {subdir!r}")
    a = m_g.sum() if mode == "data" else alpha_strength
    alpha = _proportional(a, m_g)
    gamma = []
    for counts in n_g:
        if counts.sum() <= 0:
            gamma.append(np.zeros_like(counts))
            continue
        g = counts.sum() if mode == "data" else gamma_strength
        gamma.append(_proportional(g, counts))
    return DirichletHyperparams(alpha, tuple(gamma))


def _map_mode(prior, counts):
    # posterior mode numerators, clamped at 0 then renormalized
    num = np.maximum(prior + counts - 1.0, 0.0)
    total = num.sum()
    if total <= 0:
        return prior / prior.sum()
    return num / total


@dataclass(frozen=True)
class RobotSubdirModel:
    """One robot's type and resource distributions within a subdirectory."""

    types: tuple
    theta: CategoricalParams
    paths: tuple
    resource_probs: tuple

    def sample(self, rng) -> str:
        j = sample_categorical(rng, self.theta)
        return self.paths[j][sample_categorical(rng, self.resource_probs[j])]


def fit_map(type_counts, resource_counts, hyper: DirichletHyperparams, *, types=None, paths=None):
    """MAP type and resource distributions for one robot in one subdirectory.

    Parameters
    ----------
    type_counts : array of shape (K,)
        The robot's requests per type, ``m_j``.
    resource_counts : sequence of K arrays
        The robot's requests per resource, ``n_{j,l}``.
    hyper : DirichletHyperparams
        Prior pseudo-counts with the same layout.

    Returns
    -------
    RobotSubdirModel

    Notes
    -----
    The mode of a Dirichlet posterior has numerators ``prior + count - 1``.
    Components whose numerator is negative (prior below 1 and no data) sit on
    the simplex boundary and are clamped to 0 before normalizing; if every
    component clamps, the prior proportions are used instead.
    """
    m = np.asarray(type_counts, dtype=float)
    n = [np.asarray(c, dtype=float) for c in resource_counts]
    if m.shape != hyper.alpha.shape or len(n) != len(hyper.gamma):
        raise InconsistentCounts("counts do not match the hyperparameter layout")
    if np.any(m < 0) or any(np.any(c < 0) for c in n):
        raise InconsistentCounts("counts must be nonnegative")
    for j, (mj, nj, gj) in enumerate(zip(m, n, hyper.gamma)):
        if nj.shape != gj.shape:
            raise InconsistentCounts(f"type {j}: resource count layout mismatch")
        if mj != nj.sum():
            raise InconsistentCounts(f"type {j}: m_j={mj} but resource counts sum to {nj.sum()}")

    theta = _map_mode(hyper.alpha, m)
    res = []
    for nj, gj in zip(n, hyper.gamma):
        if gj.sum() > 0:
            res.append(CategoricalParams(_map_mode(gj, nj)))
        else:
            res.append(CategoricalParams(np.full(gj.size, 1.0 / gj.size)))
    types = tuple(types) if types is not None else tuple(range(m.size))
    paths = tuple(tuple(p) for p in paths) if paths is not None else tuple(
        tuple(range(c.size)) for c in n)
    return RobotSubdirModel(types, CategoricalParams(theta), paths, tuple(res))


def sample_request_path(rng, subdir_dist: SubdirectoryDist, robot_models, robot) -> str:
    """Draw a subdirectory, then a type, then a resource for ``robot``.

    ``robot_models`` is a callable ``(robot, subdir) -> RobotSubdirModel`` or
    a mapping keyed by ``(robot, subdir)``.
    """
    lookup = robot_models.__getitem__ if isinstance(robot_models, Mapping) else None
    d = subdir_dist.subdirectories[sample_categorical(rng, subdir_dist.probs)]
    model = lookup((robot, d)) if lookup else robot_models(robot, d)
    return model.sample(rng)


class ResourceModel(BaseEstimator):
    """Fit the subdirectory and per-robot MAP resource distributions.

    Parameters
    ----------
    alpha : float, default=1.0
        Strength of the type prior.
    gamma : float, default=1.0
        Strength of each resource prior.
    strength_mode : {"constant", "data"}, default="constant"
        ``"data"`` scales both strengths by the number of global
        observations, see :func:`fit_hyperparameters`.
    """

    def __init__(self, alpha=1.0, gamma=1.0, strength_mode="constant"):
        self.alpha = alpha
        self.gamma = gamma
        self.strength_mode = strength_mode

    def fit(self, X, robots: Optional[list] = None):
        """Fit from ``X``, an iterable of :class:`Request`.

        ``robots`` fixes the robot index order; by default robots are indexed
        in order of first appearance.
        """
        requests = list(X)
        if not requests:
            raise EmptyTrace("no requests to fit")
        check_positive_scalar(self.alpha, "alpha")
        check_positive_scalar(self.gamma, "gamma")
        if self.strength_mode not in STRENGTH_MODES:
            raise ValueError(f"strength_mode must be one of {STRENGTH_MODES}")
        if robots is None:
            robots = list(dict.fromkeys(r.agent for r in requests))
        index = {a: i for i, a in enumerate(robots)}
        counts = defaultdict(Counter)
        for r in requests:
            counts[index[r.agent]][normalize_path(r.path)] += 1
        self._set_state(build_catalog(r.path for r in requests), counts)
        return self

    def _set_state(self, catalog, robot_counts):
        self.catalog_ = catalog
        self.subdir_dist_ = fit_subdirectory_dist(catalog)
        self.robot_counts_ = {int(k): dict(sorted(v.items())) for k, v in sorted(robot_counts.items())}
        self._hyper = {}
        self._models = {}
        by_subdir = defaultdict(lambda: defaultdict(dict))
        for robot, paths in self.robot_counts_.items():
            for p, c in paths.items():
                by_subdir[robot][split_path(p)[0]][p] = c
        self._robot_subdir_counts = by_subdir

    def hyperparameters(self, subdir) -> DirichletHyperparams:
        check_is_fitted(self, "catalog_")
        hyper = self._hyper.get(subdir)
        if hyper is None:
            hyper = fit_hyperparameters(self.catalog_, subdir, self.alpha, self.gamma, self.strength_mode)
            hyper = self._hyper.setdefault(subdir, hyper)
        return hyper

    def robot_model(self, robot: int, subdir) -> RobotSubdirModel:
        """MAP model for robot index ``robot`` in ``subdir`` (memoized)."""
        key = (robot, subdir)
        model = self._models.get(key)
        if model is not None:
            return model
        hyper = self.hyperparameters(subdir)
        types = self.catalog_.types(subdir)
        seen = self._robot_subdir_counts.get(robot, {}).get(subdir, {})
        paths = [self.catalog_.resources(subdir, t) for t in types]
        n = [np.array([seen.get(p, 0) for p in ps], dtype=float) for ps in paths]
        m = np.array([c.sum() for c in n])
        model = fit_map(m, n, hyper, types=types, paths=paths)
        # setdefault keeps the fill idempotent under concurrent access
        return self._models.setdefault(key, model)

    def sample_path(self, rng, robot: int) -> str:
        if not hasattr(self, "subdir_dist_"):
            check_is_fitted(self, "catalog_")
        return sample_request_path(rng, self.subdir_dist_, self.robot_model, robot)

    def to_dict(self) -> dict:
        check_is_fitted(self, "catalog_")
        return {
            "alpha_strength": float(self.alpha),
            "gamma_strength": float(self.gamma),
            "strength_mode": self.strength_mode,
            "catalog": self.catalog_.to_dict(),
            "robot_counts": {str(k): v for k, v in self.robot_counts_.items()},
        }

    @classmethod
    def from_dict(cls, d) -> "ResourceModel":
        model = cls(d["alpha_strength"], d["gamma_strength"], d["strength_mode"])
        counts = {int(k): Counter(v) for k, v in d["robot_counts"].items()}
        model._set_state(ResourceCatalog.from_dict(d["catalog"]), counts)
        return model
