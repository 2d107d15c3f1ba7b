import gzip
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings, strategies as st

from robotraffic.exceptions import BadStatus, BadTimestamp, MalformedLine, NonPositiveTimeout
from robotraffic.ingest import (
    LogFormat,
    RobotFilter,
    Sessionizer,
    UserAgentDatabase,
    filter_robots,
    load_trace,
    parse_log_line,
    read_log,
    sessionize,
    summarize,
    to_requests,
)
from robotraffic.log_model import AgentId, AgentMode, RawLogEntry, Request, Session

from conftest import make_requests

CLF = '127.0.0.1 - - [10/Oct/2000:13:55:36 -0700] "GET /a.html HTTP/1.0" 200 2326'


class TestParse:
    def test_common(self):
        e = parse_log_line(CLF, LogFormat.COMMON)
        assert (e.ip, e.path, e.status, e.response_size, e.user_agent) == ("127.0.0.1", "/a.html", 200, 2326, None)
        assert e.method == "GET" and e.http_version == "HTTP/1.0"
        expected = datetime(2000, 10, 10, 20, 55, 36, tzinfo=timezone.utc).timestamp()
        assert e.timestamp == expected

    def test_combined(self):
        e = parse_log_line(CLF + ' "-" "Googlebot/2.1"')
        assert e.user_agent == "Googlebot/2.1" and e.referrer is None

    def test_combined_with_referrer_and_escaped_quote(self):
        e = parse_log_line(CLF + r' "http://x.org/" "Weird \"Bot\" 1.0"')
        assert e.referrer == "http://x.org/" and "Bot" in e.user_agent

    @pytest.mark.parametrize("line", ["garbage", "", CLF.replace('"GET /a.html HTTP/1.0"', '"GET"')])
    def test_malformed(self, line):
        with pytest.raises(MalformedLine):
            parse_log_line(line, LogFormat.COMMON)

    def test_combined_requires_agent_fields(self):
        with pytest.raises(MalformedLine):
            parse_log_line(CLF, LogFormat.COMBINED)

    @pytest.mark.parametrize("stamp", ["10/Foo/2000:13:55:36 -0700", "32/Oct/2000:13:55:36 -0700",
                                       "10/Oct/2000 13:55:36"])
    def test_bad_timestamp(self, stamp):
        with pytest.raises(BadTimestamp):
            parse_log_line(CLF.replace("10/Oct/2000:13:55:36 -0700", stamp), LogFormat.COMMON)

    @pytest.mark.parametrize("status", ["abc", "99", "600"])
    def test_bad_status(self, status):
        with pytest.raises(BadStatus):
            parse_log_line(CLF.replace(" 200 ", f" {status} "), LogFormat.COMMON)

    def test_dash_size_and_absolute_url(self):
        line = '1.2.3.4 - - [01/Jan/2020:00:00:00 +0000] "GET http://host.org/p/q.gif?x=1 HTTP/1.1" 304 -'
        e = parse_log_line(line, "common")
        assert e.path == "/p/q.gif" and e.response_size is None and e.timestamp == 1577836800.0

    def test_http09_request_line(self):
        e = parse_log_line('1.2.3.4 - - [01/Jan/2020:00:00:00 +0000] "GET /" 200 5', "common")
        assert e.path == "/" and e.http_version == ""


def test_read_log_skips_bad_lines(tmp_path, caplog):
    p = tmp_path / "a.log.gz"
    with gzip.open(p, "wt") as fh:
        fh.write(CLF + "\nnot a log line\n" + CLF + "\n")
    assert len(list(read_log(p, "common"))) == 2
    assert "not a log line" in caplog.text or "skipped" in caplog.text.lower()
    with pytest.raises(MalformedLine):
        list(read_log(p, "common", strict=True))


class TestUserAgentDatabase:
    def test_filter(self):
        db = UserAgentDatabase(("bot",))
        es = [RawLogEntry("1.1.1.1", 0, "GET", "/", "", 200, user_agent=ua)
              for ua in ["Googlebot/2.1", "Mozilla/5.0", None]]
        assert [e.user_agent for e in filter_robots(es, db)] == ["Googlebot/2.1"]

    def test_case_insensitive(self):
        assert UserAgentDatabase(("BOT",)).matches("googlebot")

    def test_empty_list(self):
        assert filter_robots([], UserAgentDatabase(("bot",))) == []

    def test_from_lines_ignores_comments(self, ua_db_file):
        db = UserAgentDatabase.from_lines(["# c", "", "  Spider  "])
        assert db.matches("AnySpider") and not db.matches("# c")
        assert UserAgentDatabase.from_file(ua_db_file).matches("SynthBot-3/1.0")

    def test_bundled_default(self):
        db = UserAgentDatabase.default()
        assert db.matches("Googlebot/2.1") and db.matches("bingbot") and not db.matches("Mozilla/5.0 Firefox")

    def test_robot_filter_transformer(self):
        es = [RawLogEntry("1.1.1.1", 0, "GET", "/", "", 200, user_agent=ua) for ua in ["a crawler", "human"]]
        assert len(RobotFilter(["crawl"]).fit(es).transform(es)) == 1
        assert RobotFilter().get_params() == {"patterns": None}


def test_to_requests_modes():
    es = [RawLogEntry("1.1.1.1", 0, "GET", "/", "", 200, user_agent=None),
          RawLogEntry("1.1.1.1", 1, "GET", "/b", "", 200, user_agent="bot")]
    assert len(to_requests(es, AgentMode.UA_IP)) == 1
    assert len(to_requests(es, AgentMode.IP)) == 2


class TestSessionize:
    def test_timeout_split(self):
        s = sessionize(make_requests({"a": [0, 10, 100]}), 30)
        assert [x.length for x in s] == [2, 1]

    def test_per_agent(self):
        reqs = make_requests({"a": [0, 5], "b": [0, 5]})
        reqs.sort(key=lambda r: r.time)
        s = sessionize(reqs, 30)
        assert len(s) == 2 and {x.agent.user_agent for x in s} == {"abot", "bbot"}

    def test_boundary_gap_equals_timeout(self):
        assert len(sessionize(make_requests({"a": [0, 30]}), 30)) == 1

    @pytest.mark.parametrize("t", [0, -1, float("nan")])
    def test_bad_timeout(self, t):
        with pytest.raises(NonPositiveTimeout):
            sessionize([], t)
        with pytest.raises(NonPositiveTimeout):
            Sessionizer(t).fit()

    def test_transformer(self):
        assert len(Sessionizer(30).fit_transform(make_requests({"a": [0, 10, 100]}))) == 2

    @settings(max_examples=60, deadline=None)
    @given(st.dictionaries(st.sampled_from("abcd"),
                           st.lists(st.integers(0, 500), min_size=1, max_size=20), min_size=1),
           st.integers(1, 100))
    def test_partition_properties(self, times_by_agent, timeout):
        reqs = make_requests(times_by_agent)
        sessions = sessionize(reqs, timeout)
        assert sum(s.length for s in sessions) == len(reqs)
        assert sorted(id(r) for s in sessions for r in s.requests) == sorted(id(r) for r in reqs)
        assert [s.start_time for s in sessions] == sorted(s.start_time for s in sessions)
        by_agent = {}
        for s in sessions:
            assert all(b - a <= timeout for a, b in zip(s.times, s.times[1:]))
            by_agent.setdefault(s.agent, []).append(s)
        for group in by_agent.values():
            group.sort(key=lambda s: s.start_time)
            # maximality: consecutive sessions of an agent are separated by more than the timeout
            assert all(b.start_time - a.end_time > timeout for a, b in zip(group, group[1:]))


class TestSummarize:
    def test_counts(self):
        a = AgentId("bot", "1.1.1.1")
        b = AgentId("bot", "2.2.2.2")
        s = [Session(a, 0, 2, [Request(a, 0, "/x"), Request(a, 1, "/y")]),
             Session(b, 5, 1, [Request(b, 5, "/x")])]
        st_ = summarize(s)
        assert st_.to_dict() == {"num_requests": 3, "num_sessions": 2, "num_agents": 2, "num_ips": 2,
                                 "num_resources": 2, "avg_session_length": 1.5}

    def test_empty(self):
        st_ = summarize([])
        assert st_.num_requests == 0 and st_.avg_session_length == 0

    @settings(max_examples=40, deadline=None)
    @given(st.dictionaries(st.sampled_from("abc"), st.lists(st.integers(0, 300), min_size=1, max_size=15),
                           min_size=1), st.integers(1, 60))
    def test_average_is_exact_ratio(self, times_by_agent, timeout):
        stats = summarize(sessionize(make_requests(times_by_agent), timeout))
        assert stats.avg_session_length == stats.num_requests / stats.num_sessions


def test_load_trace_fixture(fixture_log):
    trace = load_trace(fixture_log, db=UserAgentDatabase.default())
    assert len(trace) == 5000
    assert trace.label == "fixture_access.log"
    assert all("SynthBot" in r.agent.user_agent for r in trace)
    assert len(load_trace(fixture_log)) == 6500
