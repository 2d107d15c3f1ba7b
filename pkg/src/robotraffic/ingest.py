"""Access-log ingestion: parsing, robot extraction, sessionization, summaries.

Logs are NCSA Common or Combined Log Format, one record per line::

    127.0.0.1 - frank [10/Oct/2000:13:55:36 -0700] "GET /a.html HTTP/1.0" 200 2326
    ... "GET /a.html HTTP/1.0" 200 2326 "http://ref/" "Googlebot/2.1"

Robots are identified by case-insensitive substring matches of the
User-Agent header against a pattern database.
"""
from __future__ import annotations

import enum
import gzip
import importlib.resources
import logging
import math
import re
from collections import defaultdict
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence
from urllib.parse import urlsplit

from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import BadStatus, BadTimestamp, LogParseError, MalformedLine, NonPositiveTimeout
from .log_model import AgentId, AgentMode, RawLogEntry, Request, Session, Trace, Origin

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 1800.0


class LogFormat(str, enum.Enum):
    COMMON = "common"
    COMBINED = "combined"


_COMMON = (
    r'(?P<ip>\S+) (?P<ident>\S+) (?P<user>\S+) \[(?P<time>[^\]]+)\] '
    r'"(?P<request>[^"]*)" (?P<status>\S+) (?P<size>\S+)'
)
_QUOTED = r'"(?P<{}>(?:[^"\\]|\\.)*)"'
_LINE_RE = {
    LogFormat.COMMON: re.compile("^" + _COMMON + r"\s*$"),
    LogFormat.COMBINED: re.compile(
        "^" + _COMMON + " " + _QUOTED.format("referrer") + " " + _QUOTED.format("agent") + r"\s*$"
    ),
}
_MONTHS = {m: i for i, m in enumerate(
    ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"], 1)}
_TIME_RE = re.compile(r"^(\d{1,2})/([A-Za-z]{3})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-])(\d{2})(\d{2})$")


def _parse_time(text: str) -> float:
    # month names mapped by hand: strptime's %b depends on the locale
    m = _TIME_RE.match(text)
    if m is None or m.group(2).lower() not in _MONTHS:
        raise BadTimestamp(f"undecodable timestamp {text!r}")
    day, mon, year, hh, mm, ss, sign, oh, om = m.groups()
    offset = timedelta(hours=int(oh), minutes=int(om))
    try:
        dt = datetime(int(year), _MONTHS[mon.lower()], int(day), int(hh), int(mm), int(ss),
                      tzinfo=timezone(offset if sign == "+" else -offset))
    except ValueError as exc:
        raise BadTimestamp(f"undecodable timestamp {text!r}") from exc
    ts = dt.timestamp()
    if ts < 0:
        raise BadTimestamp(f"timestamp {text!r} precedes the epoch")
    return ts


def _optional(field: str):
    return None if field in ("-", "") else field


def parse_log_line(line: str, format=LogFormat.COMBINED) -> RawLogEntry:
    """Parse one access-log record.

    Raises
    ------
    MalformedLine
        The record does not have the structure of ``format``.
    BadTimestamp
        The bracketed date cannot be decoded.
    BadStatus
        The status is not an integer in [100, 599].
    """
    format = LogFormat(format)
    m = _LINE_RE[format].match(line.rstrip("\r\n"))
    if m is None:
        raise MalformedLine(f"not a {format.value} log record: {line[:80]!r}")
    parts = m.group("request").split()
    if len(parts) == 3:
        method, target, version = parts
    elif len(parts) == 2:
        # HTTP/0.9 style request lines carry no version
        (method, target), version = parts, ""
    else:
        raise MalformedLine(f"bad request line {m.group('request')!r}")
    if not target.startswith("/"):
        target = urlsplit(target).path or ""
        if not target.startswith("/"):
            raise MalformedLine(f"request target is not a path: {parts[1]!r}")

    timestamp = _parse_time(m.group("time"))
    try:
        status = int(m.group("status"))
    except ValueError:
        raise BadStatus(f"non-integer status {m.group('status')!r}") from None
    if not 100 <= status <= 599:
        raise BadStatus(f"status {status} out of range")
    size = m.group("size")
    if size == "-":
        response_size = None
    elif size.isdigit():
        response_size = int(size)
    else:
        raise MalformedLine(f"bad response size {size!r}")

    referrer = agent = None
    if format is LogFormat.COMBINED:
        referrer = _optional(m.group("referrer"))
        agent = _optional(m.group("agent"))
    return RawLogEntry(
        ip=m.group("ip"), timestamp=timestamp, method=method, path=target,
        http_version=version, status=status, response_size=response_size,
        referrer=referrer, user_agent=agent,
    )


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8", errors="replace")
    return open(path, "r", encoding="utf-8", errors="replace")


def read_log(path, format=LogFormat.COMBINED, *, strict=False) -> Iterator[RawLogEntry]:
    """Yield entries from a (possibly gzipped) log file.

    Undecodable lines are skipped with a warning unless ``strict`` is set.
    """
    skipped = 0
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield parse_log_line(line, format)
            except LogParseError as exc:
                if strict:
                    raise type(exc)(f"{path}:{lineno}: {exc}") from exc
                skipped += 1
    if skipped:
        logger.warning("%s: skipped %d unparseable lines", path, skipped)


@dataclass(frozen=True)
class UserAgentDatabase:
    """Case-insensitive User-Agent substrings that identify robots."""

    patterns: tuple

    def __post_init__(self):
        pats = tuple(p.strip() for p in self.patterns)
        if not pats:
            raise ValueError("user agent database is empty")
        if any(not p for p in pats):
            raise ValueError("user agent database contains an empty pattern")
        object.__setattr__(self, "patterns", pats)
        object.__setattr__(self, "_lowered", tuple(p.lower() for p in pats))

    def matches(self, user_agent) -> bool:
        if not user_agent:
            return False
        ua = user_agent.lower()
        return any(p in ua for p in self._lowered)

    @classmethod
    def from_file(cls, path) -> "UserAgentDatabase":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "UserAgentDatabase":
        pats = [ln.strip() for ln in lines]
        return cls(tuple(p for p in pats if p and not p.startswith("#")))

    @classmethod
    def default(cls) -> "UserAgentDatabase":
        """The small pattern list bundled with the package."""
        text = importlib.resources.files("robotraffic").joinpath("data/robot_patterns.txt").read_text()
        return cls.from_lines(text.splitlines())


def filter_robots(entries: Iterable[RawLogEntry], db: UserAgentDatabase) -> list:
    """Keep entries whose User-Agent matches ``db``, preserving order."""
    return [e for e in entries if db.matches(e.user_agent)]


def to_requests(entries: Iterable[RawLogEntry], mode=AgentMode.UA_IP) -> list:
    mode = AgentMode(mode)
    out = []
    for e in entries:
        if mode is not AgentMode.IP and e.user_agent is None:
            continue
        out.append(Request(AgentId(e.user_agent, e.ip, mode), e.timestamp, e.path))
    return out


def sessionize(requests: Iterable[Request], timeout: float = DEFAULT_TIMEOUT) -> list:
    """Split each agent's requests into sessions with timeout ``timeout``.

    A gap strictly greater than ``timeout`` between consecutive requests of
    one agent starts a new session; a gap equal to it does not.  Sessions are
    returned ordered by start time (ties keep first-appearance order of
    agents).
    """
    if not (timeout > 0):
        raise NonPositiveTimeout(f"timeout must be positive, got {timeout}")
    by_agent = defaultdict(list)
    for r in requests:
        by_agent[r.agent].append(r)

    sessions = []
    for agent, reqs in by_agent.items():
        reqs.sort(key=lambda r: r.time)
        current = [reqs[0]]
        for r in reqs[1:]:
            if r.time - current[-1].time > timeout:
                sessions.append(Session(agent, current[0].time, len(current), current, timeout))
                current = [r]
            else:
                current.append(r)
        sessions.append(Session(agent, current[0].time, len(current), current, timeout))
    sessions.sort(key=lambda s: s.start_time)
    return sessions


@dataclass(frozen=True)
class SummaryStats:
    num_requests: int
    num_sessions: int
    num_agents: int
    num_ips: int
    num_resources: int
    avg_session_length: float

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(sessions: Sequence[Session]) -> SummaryStats:
    agents, ips, paths = set(), set(), set()
    num_requests = 0
    for s in sessions:
        agents.add(s.agent)
        num_requests += len(s.requests)
        for r in s.requests:
            if r.agent.ip is not None:
                ips.add(r.agent.ip)
            paths.add(r.path)
    n_sessions = len(sessions)
    return SummaryStats(
        num_requests=num_requests,
        num_sessions=n_sessions,
        num_agents=len(agents),
        num_ips=len(ips),
        num_resources=len(paths),
        avg_session_length=num_requests / n_sessions if n_sessions else 0.0,
    )


def load_trace(path, format=LogFormat.COMBINED, *, db=None, mode=AgentMode.UA_IP, label=None) -> Trace:
    """Read a log file into an observed robot trace.

    With ``db=None`` every entry with a usable agent identity is kept.
    """
    entries = read_log(path, format)
    if db is not None:
        entries = filter_robots(entries, db)
    return Trace.from_requests(to_requests(entries, mode), Origin.OBSERVED, label or Path(path).name)


class RobotFilter(TransformerMixin, BaseEstimator):
    """Transformer keeping only log entries from known robots.

    Parameters
    ----------
    patterns : sequence of str, optional
        User-Agent substrings.  Defaults to the bundled database.
    """

    def __init__(self, patterns=None):
        self.patterns = patterns

    def fit(self, X=None, y=None):
        if self.patterns is None:
            self.db_ = UserAgentDatabase.default()
        else:
            self.db_ = UserAgentDatabase(tuple(self.patterns))
        return self

    def transform(self, X):
        if not hasattr(self, "db_"):
            self.fit()
        return filter_robots(X, self.db_)


class Sessionizer(TransformerMixin, BaseEstimator):
    """Transformer from a request stream to sessions."""

    def __init__(self, timeout=DEFAULT_TIMEOUT):
        self.timeout = timeout

    def fit(self, X=None, y=None):
        if not (isinstance(self.timeout, (int, float)) and self.timeout > 0 and not math.isnan(self.timeout)):
            raise NonPositiveTimeout(f"timeout must be positive, got {self.timeout}")
        return self

    def transform(self, X):
        return sessionize(X, self.timeout)
