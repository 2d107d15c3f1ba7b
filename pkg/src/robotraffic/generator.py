"""Synthetic robot traffic generation.

The generator keeps ``N`` robots active at all times.  Each active robot
runs one session whose start time comes from a global Poisson arrival clock
and whose length is a Zeta draw.  Requests inside a session are separated by
lognormal gaps, and each request path comes from :mod:`resource_model`.
When a session emits its last request the robot goes back to the inactive
pool and a replacement session is admitted.
"""
from __future__ import annotations

import csv
import hashlib
import heapq
import importlib.resources
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Union

import jsonschema
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import __version__
from .distfit import (
    CategoricalParams,
    ExponentialParams,
    LognormalParams,
    ZetaParams,
    fit_lognormal,
    fit_poisson_rate,
    fit_zeta,
    sample_exponential,
    sample_lognormal,
    sample_zeta,
)
from .exceptions import EmptyInput, EmptyTrace, InvalidModel, NoInactiveRobot
from .ingest import DEFAULT_TIMEOUT, sessionize
from .log_model import AgentId, AgentMode, Origin, Request, Session, Trace
from .resource_model import ResourceModel

logger = logging.getLogger(__name__)

SCHEMA_ID = "robotraffic.fitted_model/1"
DEFAULT_MAX_SESSION_LENGTH = 10**6


# -- fitted model -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FittedModel:
    """Every parameter the generator needs."""

    arrivals: ExponentialParams
    session_length: ZetaParams
    inter_arrival: LognormalParams
    robots: tuple
    rho: CategoricalParams
    resources: ResourceModel
    pool_size: int
    robot_requests: tuple = ()
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "robots", tuple(self.robots))
        if len(self.robots) != len(self.rho):
            raise InvalidModel(f"{len(self.robots)} robots but {len(self.rho)} weights")
        if not 1 <= self.pool_size <= len(self.robots):
            raise InvalidModel(f"pool size {self.pool_size} outside [1, {len(self.robots)}]")
        check_is_fitted(self.resources, "catalog_")

    @property
    def subdir_dist(self):
        return self.resources.subdir_dist_

    @property
    def catalog(self):
        return self.resources.catalog_

    def to_dict(self) -> dict:
        requests = list(self.robot_requests) or [None] * len(self.robots)
        return {
            "schema": SCHEMA_ID,
            "tool_version": __version__,
            "config": dict(self.config),
            "session_arrivals": {"lambda": self.arrivals.rate},
            "session_length": {"s": self.session_length.s},
            "inter_arrival": {"mu": self.inter_arrival.mu, "sigma": self.inter_arrival.sigma},
            "pool_size": self.pool_size,
            "robots": [
                {**a.to_dict(), "requests": n, "rho": float(p)}
                for a, n, p in zip(self.robots, requests, self.rho.probs)
            ],
            "subdirectories": {
                "names": list(self.subdir_dist.subdirectories),
                "probs": [float(p) for p in self.subdir_dist.probs.probs],
            },
            "resources": self.resources.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        try:
            jsonschema.validate(d, fitted_model_schema())
        except jsonschema.ValidationError as exc:
            raise InvalidModel(f"model file does not match schema: {exc.message}") from None
        try:
            robots = [AgentId.from_dict(r) for r in d["robots"]]
            resources = ResourceModel.from_dict(d["resources"])
            return cls(
                arrivals=ExponentialParams(d["session_arrivals"]["lambda"]),
                session_length=ZetaParams(d["session_length"]["s"]),
                inter_arrival=LognormalParams(d["inter_arrival"]["mu"], d["inter_arrival"]["sigma"]),
                robots=robots,
                rho=CategoricalParams([r["rho"] for r in d["robots"]]),
                resources=resources,
                pool_size=d["pool_size"],
                robot_requests=tuple(r.get("requests") for r in d["robots"]),
                config=d.get("config", {}),
            )
        except (ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, InvalidModel):
                raise
            raise InvalidModel(f"invalid model parameters: {exc}") from exc

    @classmethod
    def load(cls, path) -> "FittedModel":
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidModel(f"{path}: not JSON ({exc})") from None
        return cls.from_dict(d)


def fitted_model_schema() -> dict:
    text = importlib.resources.files("robotraffic").joinpath("data/fitted_model.schema.json").read_text()
    return json.loads(text)


# -- fitting --------------------------------------------------------------------

def estimate_pool_size(sessions) -> int:
    """Mean number of sessions active at each observed request, rounded.

    A session is active at time ``t`` when ``start <= t <= end``.
    """
    if not sessions:
        raise EmptyInput("no sessions to estimate the pool size from")
    starts = np.sort([s.start_time for s in sessions])
    ends = np.sort([s.end_time for s in sessions])
    times = np.array([r.time for s in sessions for r in s.requests] or starts)
    active = np.searchsorted(starts, times, side="right") - np.searchsorted(ends, times, side="left")
    return max(1, int(round(float(active.mean()))))


def intra_session_gaps(sessions) -> np.ndarray:
    gaps = [np.diff(s.times) for s in sessions if len(s.requests) > 1]
    return np.concatenate(gaps) if gaps else np.empty(0)


def fit_model(sessions, *, timeout=DEFAULT_TIMEOUT, alpha=1.0, gamma=1.0, strength_mode="constant",
              pool_size=None, extra_config=None) -> FittedModel:
    """Fit every generator parameter from observed sessions."""
    sessions = list(sessions)
    if not sessions:
        raise EmptyTrace("no sessions to fit")
    requests = [r for s in sessions for r in s.requests]
    times = np.array([r.time for r in requests])

    arrivals = fit_poisson_rate(len(sessions), float(times.max() - times.min()))
    session_length = fit_zeta([len(s.requests) for s in sessions])
    gaps = intra_session_gaps(sessions)
    positive = gaps[gaps > 0]
    if positive.size < gaps.size:
        logger.info("ignoring %d zero gaps out of %d when fitting the lognormal",
                    gaps.size - positive.size, gaps.size)
    inter_arrival = fit_lognormal(positive)

    robot_counts = {}
    for r in requests:
        robot_counts[r.agent] = robot_counts.get(r.agent, 0) + 1
    robots = sorted(robot_counts, key=lambda a: (-robot_counts[a], a.label))
    n_req = np.array([robot_counts[a] for a in robots], dtype=float)
    rho = CategoricalParams(n_req / n_req.sum())

    resources = ResourceModel(alpha, gamma, strength_mode).fit(requests, robots=robots)

    estimated = estimate_pool_size(sessions)
    n = estimated if pool_size is None else int(pool_size)
    if n > len(robots):
        logger.warning("pool size %d exceeds the %d robots; clamping", n, len(robots))
        n = len(robots)

    config = {
        "timeout": float(timeout),
        "agent_mode": robots[0].mode.value,
        "alpha_strength": float(alpha),
        "gamma_strength": float(gamma),
        "strength_mode": strength_mode,
        "pool_size_override": None if pool_size is None else int(pool_size),
        "estimated_pool_size": estimated,
        "num_sessions": len(sessions),
        "num_requests": len(requests),
        "zero_gaps_ignored": int(gaps.size - positive.size),
    }
    config.update(extra_config or {})
    return FittedModel(
        arrivals=arrivals, session_length=session_length, inter_arrival=inter_arrival,
        robots=tuple(robots), rho=rho, resources=resources, pool_size=n,
        robot_requests=tuple(int(c) for c in n_req), config=config,
    )


# -- simulation -----------------------------------------------------------------

@dataclass(frozen=True)
class RequestCount:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("request count must be at least 1")


@dataclass(frozen=True)
class TimeHorizon:
    t_end: float

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("time horizon must be positive")


StopCondition = Union[RequestCount, TimeHorizon]


@dataclass
class ActiveSession:
    session_id: int
    robot: int
    start_time: float
    target_length: int
    emitted: int = 0
    next_request_time: float = 0.0

    def __post_init__(self):
        self.next_request_time = max(self.next_request_time, self.start_time)


@dataclass(frozen=True, slots=True)
class GeneratedRequest:
    time: float
    robot: AgentId
    session_id: int
    path: str


@dataclass
class GeneratedTrace:
    requests: list
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.requests)

    def to_trace(self, label="generated") -> Trace:
        return Trace(
            tuple(Request(r.robot, r.time, r.path) for r in self.requests),
            Origin.GENERATED, label,
        )


def draw_robot(rng, rho: CategoricalParams, active_set) -> int:
    """Draw an inactive robot with probability proportional to its weight."""
    weights = np.array(rho.probs)
    if active_set:
        weights[list(active_set)] = 0.0
    cdf = np.cumsum(weights)
    total = cdf[-1]
    if total <= 0:
        raise NoInactiveRobot("every robot already has an active session")
    i = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    # rounding can push the draw past the last positive weight
    return min(i, int(np.flatnonzero(weights)[-1]))


def next_session(rng, model: FittedModel, prev_arrival: float, active_set, *, session_id=0,
                 not_before=0.0, max_length=DEFAULT_MAX_SESSION_LENGTH) -> ActiveSession:
    """Start time, length and robot for the next session.

    The start time is ``prev_arrival`` plus an exponential gap, but never
    earlier than ``not_before``.
    """
    start = max(prev_arrival + float(sample_exponential(rng, model.arrivals)), not_before)
    k = sample_zeta(rng, model.session_length)
    if k > max_length:
        logger.info("session %d: length %d capped at %d", session_id, k, max_length)
        k = max_length
    robot = draw_robot(rng, model.rho, active_set)
    return ActiveSession(session_id, robot, start, int(k), next_request_time=start)


class TrafficSimulator:
    """Event-driven generator state.

    Call :meth:`step` repeatedly to emit requests in time order.  Three
    independent random streams are derived from ``seed``: one for session
    arrivals (times, lengths, robots), one for intra-session gaps and one for
    request paths.
    """

    def __init__(self, model: FittedModel, seed, *, max_session_length=DEFAULT_MAX_SESSION_LENGTH):
        if not isinstance(model, FittedModel):
            raise InvalidModel("expected a FittedModel")
        self.model = model
        self.max_session_length = max_session_length
        if isinstance(seed, np.random.Generator):
            seed = int(seed.integers(2**63))
        streams = np.random.SeedSequence(seed).spawn(3)
        self._session_rng, self._gap_rng, self._path_rng = (np.random.default_rng(s) for s in streams)
        self.last_arrival = 0.0
        self.now = 0.0
        self.active = {}
        self.active_robots = set()
        self.session_targets = {}
        self.retired = set()
        self.capped = []
        self._heap = []
        self._next_id = 0
        for _ in range(model.pool_size):
            self._admit(not_before=0.0)

    def _admit(self, not_before):
        sid = self._next_id
        self._next_id += 1
        s = next_session(
            self._session_rng, self.model, self.last_arrival, self.active_robots,
            session_id=sid, not_before=not_before, max_length=self.max_session_length,
        )
        if s.target_length >= self.max_session_length:
            self.capped.append(sid)
        self.last_arrival = s.start_time
        self.active[sid] = s
        self.active_robots.add(s.robot)
        self.session_targets[sid] = s.target_length
        heapq.heappush(self._heap, (s.next_request_time, s.robot, sid))

    def peek_time(self) -> float:
        return self._heap[0][0]

    def step(self) -> GeneratedRequest:
        t, robot, sid = heapq.heappop(self._heap)
        s = self.active[sid]
        self.now = t
        path = self.model.resources.sample_path(self._path_rng, robot)
        s.emitted += 1
        if s.emitted < s.target_length:
            s.next_request_time = t + float(sample_lognormal(self._gap_rng, self.model.inter_arrival))
            heapq.heappush(self._heap, (s.next_request_time, robot, sid))
        else:
            del self.active[sid]
            self.active_robots.discard(robot)
            self.retired.add(sid)
            self._admit(not_before=t)
        return GeneratedRequest(t, self.model.robots[robot], sid, path)


def generate(model: FittedModel, stop: StopCondition, seed: int, *,
             max_session_length=DEFAULT_MAX_SESSION_LENGTH) -> GeneratedTrace:
    """Run the simulator until ``stop`` and return the emitted requests."""
    sim = TrafficSimulator(model, seed, max_session_length=max_session_length)
    out = []
    if isinstance(stop, RequestCount):
        for _ in range(stop.n):
            out.append(sim.step())
    elif isinstance(stop, TimeHorizon):
        while sim.peek_time() <= stop.t_end:
            out.append(sim.step())
    else:
        raise TypeError(f"unknown stop condition {stop!r}")
    truncated = sorted({r.session_id for r in out} - sim.retired)
    metadata = {
        "seed": seed if isinstance(seed, int) else None,
        "stop": {"requests": stop.n} if isinstance(stop, RequestCount) else {"horizon": stop.t_end},
        "num_requests": len(out),
        "num_sessions": len({r.session_id for r in out}),
        "truncated_sessions": truncated,
        "capped_sessions": list(sim.capped),
        "session_targets": {sid: sim.session_targets[sid] for sid in sorted({r.session_id for r in out})},
    }
    return GeneratedTrace(out, metadata)


class RobotTrafficModel(BaseEstimator):
    """Estimator that fits the robot traffic model and samples traces from it.

    Parameters
    ----------
    timeout : float, default=1800
        Session timeout in seconds.
    alpha, gamma : float, default=1.0
        Dirichlet prior strengths for resource types and resources.
    strength_mode : {"constant", "data"}, default="constant"
    pool_size : int, optional
        Number of concurrently active robots.  Estimated from the data when
        omitted.
    max_session_length : int, default=1_000_000
        Cap on Zeta-drawn session lengths.

    Attributes
    ----------
    model_ : FittedModel
    sessions_ : list of Session
        The observed sessions the model was fit on.

    Examples
    --------
    >>> est = RobotTrafficModel(timeout=60).fit(trace)        # doctest: +SKIP
    >>> synthetic = est.sample(10_000, random_state=7)        # doctest: +SKIP
    """

    def __init__(self, timeout=DEFAULT_TIMEOUT, alpha=1.0, gamma=1.0, strength_mode="constant",
                 pool_size=None, max_session_length=DEFAULT_MAX_SESSION_LENGTH):
        self.timeout = timeout
        self.alpha = alpha
        self.gamma = gamma
        self.strength_mode = strength_mode
        self.pool_size = pool_size
        self.max_session_length = max_session_length

    def fit(self, X, y=None):
        """Fit from a Trace, an iterable of Request, or a list of Session."""
        items = list(X)
        if not items:
            raise EmptyTrace("nothing to fit")
        if isinstance(items[0], Session):
            sessions = items
        else:
            sessions = sessionize(items, self.timeout)
        self.sessions_ = sessions
        self.model_ = fit_model(
            sessions, timeout=self.timeout, alpha=self.alpha, gamma=self.gamma,
            strength_mode=self.strength_mode, pool_size=self.pool_size,
            extra_config={"max_session_length": int(self.max_session_length)},
        )
        return self

    def sample(self, n_requests=None, *, horizon=None, random_state=None) -> GeneratedTrace:
        """Generate ``n_requests`` requests, or all requests up to ``horizon``."""
        check_is_fitted(self, "model_")
        if (n_requests is None) == (horizon is None):
            raise ValueError("give exactly one of n_requests and horizon")
        if random_state is None:
            raise ValueError("random_state is required")
        stop = RequestCount(n_requests) if n_requests is not None else TimeHorizon(horizon)
        return generate(self.model_, stop, random_state, max_session_length=self.max_session_length)

    @classmethod
    def from_fitted(cls, model: FittedModel) -> "RobotTrafficModel":
        cfg = model.config
        est = cls(
            timeout=cfg.get("timeout", DEFAULT_TIMEOUT),
            alpha=model.resources.alpha, gamma=model.resources.gamma,
            strength_mode=model.resources.strength_mode,
            pool_size=cfg.get("pool_size_override"),
            max_session_length=cfg.get("max_session_length", DEFAULT_MAX_SESSION_LENGTH),
        )
        est.model_ = model
        return est


# -- trace files ------------------------------------------------------------------

TRACE_HEADER = ["time", "robot", "session_id", "path"]


def write_trace_csv(trace: GeneratedTrace, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in trace.requests:
            w.writerow([f"{r.time:.3f}", r.robot.label, r.session_id, r.path])


def read_trace_csv(path) -> GeneratedTrace:
    """Read a generated trace; robots are identified by their label."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TRACE_HEADER)}")
        agents = {}
        for row in reader:
            t, label, sid, p = row
            agent = agents.get(label)
            if agent is None:
                agent = agents[label] = AgentId(user_agent=label, mode=AgentMode.UA)
            out.append(GeneratedRequest(float(t), agent, int(sid), p))
    return GeneratedTrace(out, {})


def is_trace_csv(path) -> bool:
    with open(path, encoding="utf-8", errors="replace") as fh:
        return fh.readline().strip() == ",".join(TRACE_HEADER)


def _synthetic_ip(index: int) -> str:
    return f"10.{(index >> 16) & 255}.{(index >> 8) & 255}.{index & 255}"


def write_combined_log(trace: GeneratedTrace, path, *, epoch: float = 0.0):
    """Export as Combined Log Format (one-second resolution, UTC)."""
    ips = {}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in trace.requests:
            ip = ips.setdefault(r.robot, _synthetic_ip(len(ips) + 1))
            ts = datetime.fromtimestamp(math.floor(epoch + r.time), tz=timezone.utc)
            ua = r.robot.user_agent or r.robot.label
            fh.write(
                f'{ip} - - [{ts.strftime("%d/%b/%Y:%H:%M:%S +0000")}] "GET {r.path} HTTP/1.1" '
                f'200 - "-" "{ua}"\n'
            )


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
