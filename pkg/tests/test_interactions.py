from __future__ import annotations

import numpy as np
import pytest

from coengage.errors import InputError
from coengage.io.interactions import IngestOptions, read_interactions

MIXED_CSV = """engager,target,count,timestamp
u1,a,2,2020-09-01T00:00:00Z
u1,a,1,
u2,a,0,
,b,1,
u3,b,1,notatime
u4,b,1,2020-09-02,extra
u5,u5,1,
u2,b,x,
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_lenient_csv_reports_rejected_rows_with_lines(tmp_path):
    res = read_interactions(_write(tmp_path, "rows.csv", MIXED_CSV))
    r = res.report
    assert [e.line for e in r.errors] == [4, 5, 6, 7, 9]
    reasons = {e.line: e.reason for e in r.errors}
    assert reasons[4] == "count must be >= 1"
    assert reasons[5] == "empty engager"
    assert reasons[6] == "invalid timestamp"
    assert reasons[9] == "count must be an integer"
    assert r.total_rows == 8
    assert r.accepted_rows == 2
    assert r.dropped_self_loops == 1
    assert r.rejected_rows == 5
    assert r.total_rows == r.accepted_rows + r.rejected_rows + r.dropped_self_loops
    assert res.graph.weight("u1", "a") == 3
    assert res.graph.index.handles == ("a", "u1")
    assert r.aggregated_rows == 1


def test_keep_self_loops(tmp_path):
    res = read_interactions(
        _write(tmp_path, "rows.csv", "engager,target\nu,u\nu,a\n"),
        options=IngestOptions(keep_self_loops=True),
    )
    assert res.graph.weight("u", "u") == 1
    assert res.report.dropped_self_loops == 0


def test_count_defaults_to_one(tmp_path):
    res = read_interactions(_write(tmp_path, "rows.csv", "engager,target\nu,a\nu,a\nv,a\n"))
    assert res.graph.weight("u", "a") == 2
    assert res.graph.total_weight == 3


def test_strict_mode_raises_on_first_bad_row(tmp_path):
    p = _write(tmp_path, "rows.csv", "engager,target,count\nu,a,1\nu,b,0\nu,c,-1\n")
    with pytest.raises(InputError, match=r":3: count must be >= 1"):
        read_interactions(p, options=IngestOptions(strict=True))


def test_missing_columns_and_files(tmp_path):
    with pytest.raises(InputError):
        read_interactions(_write(tmp_path, "rows.csv", "who,whom\nu,a\n"))
    with pytest.raises(InputError):
        read_interactions(tmp_path / "absent.csv")
    with pytest.raises(InputError):
        read_interactions(_write(tmp_path, "rows.txt", "engager,target\n"), format="parquet")


def test_header_only_file_gives_empty_graph(tmp_path):
    res = read_interactions(_write(tmp_path, "rows.csv", "engager,target,count\n"))
    assert res.graph.node_count == 0
    assert res.report.total_rows == 0


def test_jsonl_rows(tmp_path):
    text = "\n".join(
        [
            '{"engager": "u1", "target": "a", "count": 2}',
            "not json",
            '{"engager": "u2", "target": "a"}',
            "[1, 2]",
            '{"engager": "u2", "target": "b", "count": 2.0, "timestamp": "2020-09-01T12:00:00Z"}',
        ]
    )
    res = read_interactions(_write(tmp_path, "rows.jsonl", text + "\n"), format="jsonl")
    assert [e.line for e in res.report.errors] == [2, 4]
    assert res.graph.weight("u1", "a") == 2
    assert res.graph.weight("u2", "a") == 1
    assert res.graph.weight("u2", "b") == 2
    assert res.report.total_rows == 5
    assert res.rows["timestamp"].notna().sum() == 1


def test_row_order_does_not_change_the_graph(tmp_path):
    rng = np.random.default_rng(7)
    lines = [f"u{rng.integers(0, 20)},t{rng.integers(0, 10)},{rng.integers(1, 4)}" for _ in range(200)]
    shuffled = [lines[i] for i in rng.permutation(len(lines))]
    a = read_interactions(_write(tmp_path, "a.csv", "engager,target,count\n" + "\n".join(lines) + "\n"))
    b = read_interactions(_write(tmp_path, "b.csv", "engager,target,count\n" + "\n".join(shuffled) + "\n"))
    assert a.graph.index.handles == b.graph.index.handles
    assert (a.graph.matrix != b.graph.matrix).nnz == 0


def test_small_chunks_keep_line_numbers(tmp_path):
    p = _write(tmp_path, "rows.csv", "engager,target,count\nu,a,1\nu,b,1\nu,c,0\nu,d,1\nu,e,zz\n")
    res = read_interactions(p, options=IngestOptions(chunksize=2))
    assert [e.line for e in res.report.errors] == [4, 6]
    assert res.report.accepted_rows == 3


def test_counts_must_be_exact_integers(tmp_path):
    text = "engager,target,count\nu,a,99999999999999999999\nu,b,1e3\nu,c,2.0\nu,d,+4\nu,e,007\nu,f,-3\n"
    res = read_interactions(_write(tmp_path, "rows.csv", text))
    reasons = {e.line: e.reason for e in res.report.errors}
    assert reasons == {
        2: "count must be <= 999999999999999999",
        3: "count must be an integer",
        4: "count must be an integer",
        7: "count must be >= 1",
    }
    assert res.graph.weight("u", "d") == 4
    assert res.graph.weight("u", "e") == 7
    with pytest.raises(InputError, match=":2:"):
        read_interactions(_write(tmp_path, "big.csv", "engager,target,count\nu,a,99999999999999999999\n"),
                          options=IngestOptions(strict=True))


def test_recount_of_random_rows(tmp_path):
    rng = np.random.default_rng(99)
    engagers = rng.integers(0, 300, size=10_000)
    targets = rng.integers(0, 120, size=10_000)
    counts = rng.integers(1, 5, size=10_000)
    lines = [f"e{e},t{t},{c}" for e, t, c in zip(engagers, targets, counts)]
    res = read_interactions(_write(tmp_path, "rows.csv", "engager,target,count\n" + "\n".join(lines) + "\n"))
    assert res.report.accepted_rows == 10_000
    assert res.graph.total_weight == int(counts.sum())
    expected: dict[tuple[str, str], int] = {}
    for e, t, c in zip(engagers, targets, counts):
        expected[(f"e{e}", f"t{t}")] = expected.get((f"e{e}", f"t{t}"), 0) + int(c)
    assert res.graph.edge_count == len(expected)
    for (e, t), w in list(expected.items())[:500]:
        assert res.graph.weight(e, t) == w


TWEETS = "\n".join(
    [
        '{"created_at": "Tue Sep 01 12:00:00 +0000 2020", "user": {"screen_name": "alice"},'
        ' "retweeted_status": {"user": {"screen_name": "news"}}}',
        '{"created_at": "Tue Sep 01 13:00:00 +0000 2020", "user": {"screen_name": "alice"}, "text": "hello"}',
        '{"created_at": "2020-09-02T08:30:00Z", "user": {"id_str": "42"},'
        ' "retweeted_status": {"user": {"screen_name": "news"}}}',
        '{"created_at": "Wed Sep 02 09:00:00 +0000 2020", "user": {"screen_name": "alice"},'
        ' "retweeted_status": {"user": {"screen_name": "news"}}}',
        '{"user": {"screen_name": "bob"}, "retweeted_status": {"user": {}}}',
        '{"user": {"screen_name": "bob"}, "retweeted_status": "news"}',
    ]
)


def test_twitter_retweet_objects(tmp_path):
    res = read_interactions(_write(tmp_path, "tweets.jsonl", TWEETS + "\n"), format="twitter")
    assert res.graph.weight("alice", "news") == 2
    assert res.graph.weight("42", "news") == 1
    assert res.report.skipped_rows == 1
    assert [(e.line, e.reason) for e in res.report.errors] == [
        (5, "empty target"),
        (6, "retweeted_status must be a JSON object"),
    ]
    stamps = res.rows["timestamp"].dt.strftime("%Y-%m-%dT%H:%M").tolist()
    assert stamps == ["2020-09-01T12:00", "2020-09-02T08:30", "2020-09-02T09:00"]


def test_twitter_strict_mode_fails_on_first_malformed_tweet(tmp_path):
    with pytest.raises(InputError, match=":5:"):
        read_interactions(
            _write(tmp_path, "tweets.jsonl", "\n".join(TWEETS.splitlines()[:5]) + "\n"),
            format="twitter",
            options=IngestOptions(strict=True),
        )
