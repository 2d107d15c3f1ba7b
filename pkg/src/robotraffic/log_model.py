"""Value types shared across the toolkit.

All types are immutable once built.  Times are real-valued seconds since the
epoch for observed traffic and seconds since the start of the run for
generated traffic.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence


class AgentMode(str, enum.Enum):
    """Which fields identify an agent."""

    UA = "UA"
    IP = "IP"
    UA_IP = "UA+IP"


class Origin(str, enum.Enum):
    OBSERVED = "observed"
    GENERATED = "generated"


@dataclass(frozen=True)
class RawLogEntry:
    """One parsed access-log record."""

    ip: str
    timestamp: float
    method: str
    path: str
    http_version: str
    status: int
    response_size: Optional[int] = None
    referrer: Optional[str] = None
    user_agent: Optional[str] = None

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError(f"negative timestamp {self.timestamp}")
        if not 100 <= self.status <= 599:
            raise ValueError(f"status {self.status} outside [100, 599]")
        if not self.path.startswith("/"):
            raise ValueError(f"path {self.path!r} does not start with '/'")
        if self.response_size is not None and self.response_size < 0:
            raise ValueError("negative response size")


@dataclass(frozen=True, eq=False)
class AgentId:
    """Identity of the client making requests.

    Both the User-Agent string and the IP are kept when known, but only the
    fields selected by ``mode`` take part in equality and hashing.  This lets
    per-IP statistics be computed even when agents are keyed by User-Agent.
    """

    user_agent: Optional[str] = None
    ip: Optional[str] = None
    mode: AgentMode = AgentMode.UA_IP

    def __post_init__(self):
        object.__setattr__(self, "mode", AgentMode(self.mode))
        if self.user_agent is None and self.ip is None:
            raise ValueError("AgentId needs a user agent or an IP")
        if self.mode in (AgentMode.UA, AgentMode.UA_IP) and self.user_agent is None:
            raise ValueError(f"mode {self.mode.value} requires a user agent")
        if self.mode in (AgentMode.IP, AgentMode.UA_IP) and self.ip is None:
            raise ValueError(f"mode {self.mode.value} requires an IP")
        if self.mode is AgentMode.UA:
            key = (self.mode.value, self.user_agent)
        elif self.mode is AgentMode.IP:
            key = (self.mode.value, self.ip)
        else:
            key = (self.mode.value, self.user_agent, self.ip)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    @property
    def key(self) -> tuple:
        """The fields that identify this agent under its mode."""
        return self._key

    @property
    def label(self) -> str:
        """Human-readable identifier, used as the ``robot`` column in traces."""
        if self.mode is AgentMode.UA:
            return self.user_agent
        if self.mode is AgentMode.IP:
            return self.ip
        return f"{self.user_agent}|{self.ip}"

    def __eq__(self, other):
        if not isinstance(other, AgentId):
            return NotImplemented
        return self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"AgentId({self.label!r}, mode={self.mode.value})"

    def to_dict(self) -> dict:
        return {"user_agent": self.user_agent, "ip": self.ip, "mode": self.mode.value}

    @classmethod
    def from_dict(cls, d: dict) -> "AgentId":
        return cls(user_agent=d.get("user_agent"), ip=d.get("ip"), mode=d.get("mode", "UA+IP"))


@dataclass(frozen=True)
class Request:
    agent: AgentId
    time: float
    path: str

    def __post_init__(self):
        if self.time < 0:
            raise ValueError(f"negative request time {self.time}")


@dataclass(frozen=True)
class Session:
    """A run of one agent's requests with no gap longer than ``timeout``.

    ``start_time`` and ``length`` are the ``t0`` and ``k`` of the session
    tuple; ``requests`` keeps the observed requests in time order.
    """

    agent: AgentId
    start_time: float
    length: int
    requests: tuple = ()
    timeout: float = float("inf")

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        if self.length < 1:
            raise ValueError("session length must be positive")
        reqs = self.requests
        if reqs:
            if reqs[0].time != self.start_time:
                raise ValueError("first request must start the session")
            for a, b in zip(reqs, reqs[1:]):
                gap = b.time - a.time
                if gap < 0:
                    raise ValueError("session requests out of order")
                if gap > self.timeout:
                    raise ValueError(f"gap {gap} exceeds timeout {self.timeout}")

    @property
    def end_time(self) -> float:
        return self.requests[-1].time if self.requests else self.start_time

    @property
    def times(self) -> list:
        return [r.time for r in self.requests]


@dataclass(frozen=True)
class Trace:
    """A time-ordered request stream, observed or generated."""

    requests: tuple
    origin: Origin = Origin.OBSERVED
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "origin", Origin(self.origin))
        times = [r.time for r in self.requests]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("trace requests must be nondecreasing in time")

    @classmethod
    def from_requests(cls, requests: Iterable[Request], origin=Origin.OBSERVED, label="") -> "Trace":
        """Build a trace, stable-sorting ``requests`` by time."""
        return cls(tuple(sorted(requests, key=lambda r: r.time)), origin, label)

    def __len__(self):
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    @property
    def paths(self) -> list:
        return [r.path for r in self.requests]


def flatten(sessions: Sequence[Session]) -> list:
    return [r for s in sessions for r in s.requests]
