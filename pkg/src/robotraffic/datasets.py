"""Synthetic stand-ins for real robot access logs.

:func:`make_ground_truth_model` builds a known traffic model with a
made-up site layout; :func:`make_robot_traffic` samples an "observed" trace
from it.  Fitting on such a trace and comparing against fresh samples is how
the toolkit is checked end to end without private server logs.
"""
from __future__ import annotations

import numpy as np

from .distfit import CategoricalParams, ExponentialParams, LognormalParams, ZetaParams
from .generator import FittedModel, RequestCount, generate
from .log_model import AgentId, Origin, Request, Trace
from .resource_model import ResourceModel

_TYPES = ["html", "html", "html", "gif", "jpg", "png", "css", "js", "pdf", "none"]
_DIR_WORDS = ["docs", "news", "images", "people", "research", "events", "courses", "about",
              "library", "static", "admissions", "blog"]


def _site_layout(rng, n_subdirs, max_resources):
    subdirs = ["/"]
    while len(subdirs) < n_subdirs:
        parent = subdirs[rng.integers(len(subdirs))]
        word = _DIR_WORDS[rng.integers(len(_DIR_WORDS))]
        child = f"{parent.rstrip('/')}/{word}{rng.integers(100)}"
        if child not in subdirs:
            subdirs.append(child)
    layout = {}
    for d in subdirs:
        n = int(rng.integers(1, max_resources + 1))
        paths = []
        for i in range(n):
            t = _TYPES[rng.integers(len(_TYPES))]
            base = d.rstrip("/")
            paths.append(f"{base}/page{i}/" if t == "none" else f"{base}/file{i}.{t}")
        layout[d] = paths
    return layout


def make_ground_truth_model(*, n_robots=40, n_subdirs=25, max_resources=30, pool_size=6,
                            rate=1 / 120.0, s=2.5, mu=0.5, sigma=1.0, train_requests=20_000,
                            strength_mode="constant", seed=0) -> FittedModel:
    """A traffic model with known parameters and a synthetic site.

    Robot weights follow a Zipf law over robots.  Each robot's resource
    preferences come from a synthetic training history in which it favours
    a few subdirectories and, within each, popular resources.
    """
    rng = np.random.default_rng(seed)
    robots = tuple(
        AgentId(f"SynthBot-{i}/1.0 (+http://example.org/bot{i})", f"192.0.2.{i % 250 + 1}")
        for i in range(n_robots)
    )
    weights = 1.0 / np.arange(1, n_robots + 1)
    rho = weights / weights.sum()

    layout = _site_layout(rng, n_subdirs, max_resources)
    subdirs = list(layout)
    history = []
    per_robot = np.maximum(1, rng.multinomial(train_requests, rho))
    for i, n in enumerate(per_robot):
        favourites = rng.choice(len(subdirs), size=min(len(subdirs), 1 + rng.integers(5)), replace=False)
        for _ in range(n):
            if rng.random() < 0.8:
                d = subdirs[favourites[rng.integers(favourites.size)]]
            else:
                d = subdirs[rng.integers(len(subdirs))]
            paths = layout[d]
            pop = 1.0 / np.arange(1, len(paths) + 1)
            p = paths[rng.choice(len(paths), p=pop / pop.sum())]
            history.append(Request(robots[i], 0.0, p))
    # every catalogued resource appears at least once
    for d, paths in layout.items():
        for p in paths:
            history.append(Request(robots[rng.integers(n_robots)], 0.0, p))

    resources = ResourceModel(strength_mode=strength_mode).fit(history, robots=list(robots))
    return FittedModel(
        arrivals=ExponentialParams(rate),
        session_length=ZetaParams(s),
        inter_arrival=LognormalParams(mu, sigma),
        robots=robots,
        rho=CategoricalParams(rho),
        resources=resources,
        pool_size=pool_size,
        config={"synthetic": True, "seed": seed},
    )


def make_robot_traffic(n_requests=100_000, *, seed=0, model=None, epoch=0.0, **model_kwargs):
    """Sample an observed-looking robot trace.

    Returns
    -------
    trace : Trace
        ``n_requests`` requests with full ``AgentId`` identities.
    model : FittedModel
        The ground truth the trace was drawn from.
    """
    if model is None:
        model = make_ground_truth_model(seed=seed, **model_kwargs)
    gen = generate(model, RequestCount(n_requests), seed + 1)
    trace = Trace(
        tuple(Request(r.robot, epoch + r.time, r.path) for r in gen.requests),
        Origin.OBSERVED, f"synthetic-{seed}",
    )
    return trace, model
