import json
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from conftest import at, issue_lists
from waste_radar.snapshot import (
    ForkRecord,
    IssueKind,
    IssueRecord,
    LabelMapping,
    Priority,
    PullRecord,
    RepoRef,
    RepoSnapshot,
    SnapshotFormatError,
    SnapshotValidationError,
    classify_issue,
    dumps_snapshot,
    load_snapshot,
    parse_timestamp,
    save_snapshot,
    snapshot_to_dict,
)


def three_fork_snapshot(**overrides):
    fields = dict(
        repo=RepoRef("twbs", "bootstrap"),
        parent_pushed_at=at(100),
        fetched_at=at(101),
        created_at=at(-2000),
        forks=(
            ForkRecord("b/bootstrap", "b", at(1), at(50)),
            ForkRecord("a/bootstrap", "a", at(10), at(5), description="fork of bootstrap"),
            ForkRecord("c/bootstrap", "c", at(20), at(20)),
        ),
        pulls=(
            PullRecord(2, "a", "a/bootstrap", at(6), at(7), at(7)),
            PullRecord(1, "z", None, at(3), at(4)),
        ),
        issues=(IssueRecord(9, at(1), at(2), ("bug",), Priority.UNSPECIFIED, IssueKind.BUG),),
    )
    fields.update(overrides)
    return RepoSnapshot(**fields)


class TestClassifyIssue:
    def test_direct_rule(self):
        assert classify_issue(["priority: high", "bug"]) == (Priority.HIGH, IssueKind.BUG)

    def test_no_labels(self):
        assert classify_issue([]) == (Priority.UNSPECIFIED, IssueKind.OTHER)

    def test_p2_enhancement_follows_default_table(self):
        # default rules map p2 to Low
        assert classify_issue(["enhancement", "P2"]) == (Priority.LOW, IssueKind.FEATURE)

    def test_case_insensitive_and_first_rule_wins(self):
        assert classify_issue(["Priority: Medium", "P0"]) == (Priority.HIGH, IssueKind.OTHER)
        assert classify_issue(["Enhancement", "Bug"]) == (Priority.UNSPECIFIED, IssueKind.BUG)

    def test_custom_mapping(self):
        mapping = LabelMapping(priority_rules=(("urgent", Priority.HIGH),), kind_rules=(("defect", IssueKind.BUG),))
        assert classify_issue(["Urgent", "defect"], mapping) == (Priority.HIGH, IssueKind.BUG)
        assert classify_issue(["bug"], mapping) == (Priority.UNSPECIFIED, IssueKind.OTHER)

    def test_empty_pattern_rejected(self):
        with pytest.raises(SnapshotValidationError):
            LabelMapping(priority_rules=(("", Priority.HIGH),), kind_rules=())

    @given(st.lists(st.text(max_size=20), max_size=6))
    def test_pure(self, labels):
        assert classify_issue(labels) == classify_issue(list(labels))


class TestRoundTrip:
    def test_three_fork_fixture(self, tmp_path):
        snap = three_fork_snapshot()
        path = tmp_path / "s.json"
        save_snapshot(snap, path)
        assert load_snapshot(path) == snap

    def test_empty_lists(self, tmp_path):
        snap = three_fork_snapshot(forks=(), pulls=(), issues=())
        save_snapshot(snap, tmp_path / "s.json")
        loaded = load_snapshot(tmp_path / "s.json")
        assert loaded == snap and loaded.forks == ()

    def test_byte_stable_regardless_of_input_order(self, tmp_path):
        a = three_fork_snapshot()
        b = three_fork_snapshot(forks=tuple(reversed(a.forks)), pulls=tuple(reversed(a.pulls)))
        assert dumps_snapshot(a) == dumps_snapshot(b)
        data = json.loads(dumps_snapshot(a))
        assert [f["full_name"] for f in data["forks"]] == ["a/bootstrap", "b/bootstrap", "c/bootstrap"]
        assert set(data) == {"format_version", "repo", "meta", "forks", "pulls", "issues"}
        assert data["format_version"] == 1
        assert data["meta"]["fetched_at"].endswith("Z")

    @given(issue_lists(max_size=25))
    def test_round_trip_property(self, issues):
        snap = three_fork_snapshot(issues=tuple(issues))
        assert load_snapshot_from_text(dumps_snapshot(snap)) == snap

    def test_timezone_normalized(self):
        plus2 = timezone(timedelta(hours=2))
        fork = ForkRecord("x/y", "x", datetime(2024, 1, 1, 2, 0, tzinfo=plus2), datetime(2024, 1, 1, tzinfo=timezone.utc))
        assert fork.created_at == fork.pushed_at
        assert fork.created_at.tzinfo == timezone.utc


def load_snapshot_from_text(text):
    from waste_radar.snapshot import snapshot_from_dict

    return snapshot_from_dict(json.loads(text))


class TestLoadErrors:
    def write(self, tmp_path, mutate):
        data = snapshot_to_dict(three_fork_snapshot())
        mutate(data)
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        return path

    def test_merged_without_closed(self, tmp_path):
        def mutate(d):
            d["pulls"][1]["closed_at"] = None

        with pytest.raises(SnapshotValidationError, match="merged_at"):
            load_snapshot(self.write(tmp_path, mutate))

    def test_issue_closed_before_created(self, tmp_path):
        def mutate(d):
            d["issues"][0]["closed_at"] = "2000-01-01T00:00:00Z"

        with pytest.raises(SnapshotValidationError):
            load_snapshot(self.write(tmp_path, mutate))

    def test_missing_field_is_named(self, tmp_path):
        def mutate(d):
            del d["forks"][1]["pushed_at"]

        with pytest.raises(SnapshotFormatError) as err:
            load_snapshot(self.write(tmp_path, mutate))
        assert err.value.field == "forks[1].pushed_at"

    def test_wrong_type_is_named(self, tmp_path):
        def mutate(d):
            d["meta"]["stargazers"] = "many"

        with pytest.raises(SnapshotFormatError) as err:
            load_snapshot(self.write(tmp_path, mutate))
        assert err.value.field == "meta.stargazers"

    def test_bad_enum(self, tmp_path):
        def mutate(d):
            d["issues"][0]["priority"] = "Urgent"

        with pytest.raises(SnapshotFormatError, match="issues\\[0\\].priority"):
            load_snapshot(self.write(tmp_path, mutate))

    def test_duplicate_identifiers(self, tmp_path):
        def mutate(d):
            d["pulls"][1]["number"] = d["pulls"][0]["number"]

        with pytest.raises(SnapshotValidationError, match="duplicate"):
            load_snapshot(self.write(tmp_path, mutate))

    def test_not_json(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{nope")
        with pytest.raises(SnapshotFormatError):
            load_snapshot(path)

    def test_fetched_before_created(self):
        with pytest.raises(SnapshotValidationError):
            three_fork_snapshot(fetched_at=at(-3000))


def test_repo_ref_rules():
    assert RepoRef.parse("twbs/bootstrap") == RepoRef("twbs", "bootstrap")
    for bad in ("", "twbs", "a/b/c", "/x"):
        with pytest.raises(SnapshotValidationError):
            RepoRef.parse(bad)


def test_parse_timestamp_requires_offset():
    assert parse_timestamp("2024-04-30T00:00:00Z") == datetime(2024, 4, 30, tzinfo=timezone.utc)
    with pytest.raises(ValueError):
        parse_timestamp("2024-04-30T00:00:00")
