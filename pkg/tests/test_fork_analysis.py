import random
from datetime import timedelta

import pytest
from hypothesis import given, settings, strategies as st

from conftest import at
from oracles import best_split_exact, best_split_float
from waste_radar.fork_analysis import (
    ForkClass,
    ForkDistribution,
    classify_forks,
    is_active,
    is_backup,
    kmeans_two,
    split_contribution,
    zhou_independent_forks,
)
from waste_radar.snapshot import ForkRecord, PullRecord, RepoRef, RepoSnapshot

PARENT = at(1000)


def fork(name, created, pushed, description=None):
    return ForkRecord(f"{name}/repo", name, created, pushed, description)


def snapshot(forks=(), pulls=()):
    return RepoSnapshot(RepoRef("o", "repo"), PARENT, PARENT + timedelta(days=1), at(-5000), forks=tuple(forks), pulls=tuple(pulls))


def gap_fork(name, days, created_offset=30):
    pushed = PARENT - timedelta(days=days)
    return fork(name, pushed - timedelta(days=created_offset), pushed)


class TestBackup:
    def test_pushed_before_created(self):
        assert is_backup(fork("a", at(0, 0) + timedelta(days=517), at(0) - timedelta(days=1)))

    def test_equal_is_not_backup(self):
        assert not is_backup(fork("a", at(5), at(5)))

    def test_one_second_later_is_not_backup(self):
        assert not is_backup(fork("a", at(5), at(5, seconds=1)))


class TestActive:
    def test_ten_days(self):
        assert is_active(gap_fork("a", 10), PARENT)

    def test_exactly_ninety_days(self):
        f = fork("a", at(0), PARENT - timedelta(seconds=7_776_000))
        assert not is_active(f, PARENT)

    def test_one_second_inside(self):
        assert is_active(fork("a", at(0), PARENT - timedelta(seconds=7_775_999)), PARENT)

    def test_fork_ahead_of_parent(self):
        assert is_active(gap_fork("a", -3), PARENT)


class TestKMeans:
    def test_well_separated(self):
        result = kmeans_two([1, 2, 100, 101])
        assert result.assignments == (0, 0, 1, 1)
        assert result.centroids == (1.5, 100.5)
        assert result.converged

    def test_identical_values(self):
        result = kmeans_two([5, 5, 5])
        assert result.assignments == (0, 0, 0)
        assert result.centroids == (5.0, 5.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            kmeans_two([])

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            kmeans_two([1, 2], tol=0)

    def test_two_band_example(self):
        rng = random.Random(3)
        values = [rng.uniform(0, 10) for _ in range(20)] + [rng.uniform(500, 510) for _ in range(20)]
        rng.shuffle(values)
        result = kmeans_two(values)
        assert list(result.assignments) == best_split_float(values)
        assert list(result.assignments) == [0 if v <= 10 else 1 for v in values]

    def test_local_optimum_of_plain_lloyd_is_escaped(self):
        # Lloyd from (min, max) stalls at the split {0..8 | 10..18}
        values = [0, 0, 0, 0, 3, 7, 8, 10, 14, 18]
        assert list(kmeans_two(values).assignments) == best_split_exact(values)
        assert kmeans_two(values).assignments == (0, 0, 0, 0, 0, 1, 1, 1, 1, 1)

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.integers(0, 30), min_size=1, max_size=40))
    def test_matches_exhaustive_split_on_integers(self, values):
        result = kmeans_two(values)
        assert list(result.assignments) == best_split_exact(values)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=60))
    def test_invariants(self, values):
        result = kmeans_two(values)
        c0, c1 = result.centroids
        assert c0 <= c1
        assert result.iterations >= 1
        if len(set(values)) > 1:
            # every point sits nearer its own centroid (ties to cluster 0)
            for v, a in zip(values, result.assignments):
                nearest = 0 if abs(v - c0) <= abs(v - c1) else 1
                assert a == nearest or abs(abs(v - c0) - abs(v - c1)) < 1e-6 * max(1.0, abs(v))


class TestClassifyForks:
    def test_hand_fixture(self):
        forks = [
            fork("backup", at(500), at(400)),
            gap_fork("active", 10),
            gap_fork("ps1", 100),
            gap_fork("ps2", 101),
            gap_fork("stale", 900),
        ]
        result = classify_forks(snapshot(forks))
        counts = result.distribution.counts
        assert counts == {ForkClass.BACKUP: 1, ForkClass.ACTIVE: 1, ForkClass.POTENTIALLY_STALE: 2, ForkClass.STALE: 1}
        assert result.classes["stale/repo"] is ForkClass.STALE
        assert result.gaps["ps1/repo"] == pytest.approx(100.0)

    def test_empty(self):
        result = classify_forks(snapshot())
        assert result.distribution.total == 0
        assert all(v == 0 for v in result.distribution.counts.values())
        assert result.distribution.percentages == {}

    def test_single_inactive_is_potentially_stale(self):
        result = classify_forks(snapshot([gap_fork("x", 400)]))
        assert result.classes["x/repo"] is ForkClass.POTENTIALLY_STALE

    def test_backup_takes_precedence_over_gap(self):
        old = fork("old", PARENT - timedelta(days=3000), PARENT - timedelta(days=3001))
        assert classify_forks(snapshot([old, gap_fork("a", 200), gap_fork("b", 900)])).classes["old/repo"] is ForkClass.BACKUP

    def test_r0_fork_percentages(self):
        dist = ForkDistribution.from_counts(active=1653, backup=140646, potentially_stale=2440, stale=3157)
        assert dist.total == 147896
        pct = dist.percentages
        assert sum(pct.values()) == pytest.approx(100, abs=1e-6)
        assert [round(pct[c], 4) for c in (ForkClass.BACKUP, ForkClass.STALE)] == [95.0979, 2.1346]

    @settings(max_examples=150, deadline=None)
    @given(
        st.lists(
            st.tuples(st.integers(-400, 3000), st.integers(-50, 400)),
            max_size=40,
        )
    )
    def test_totality_and_window_monotonicity(self, shape):
        forks = []
        for n, (gap, age) in enumerate(shape):
            pushed = PARENT - timedelta(days=gap)
            forks.append(fork(f"f{n}", pushed - timedelta(days=age), pushed))
        snap = snapshot(forks)
        wide = classify_forks(snap)
        assert sum(wide.distribution.counts.values()) == len(forks) == wide.distribution.total
        assert set(wide.classes) == {f.full_name for f in forks}
        narrow = classify_forks(snap, window=timedelta(days=30))
        for name, cls in wide.classes.items():
            if cls is ForkClass.STALE:
                assert narrow.classes[name] is not ForkClass.ACTIVE
            if cls is ForkClass.BACKUP:
                assert narrow.classes[name] is ForkClass.BACKUP


class TestContribution:
    def test_head_linkage_and_author_fallback(self):
        a, b, c = gap_fork("alice", 5), gap_fork("bob", 5), gap_fork("carol", 5)
        pulls = [
            PullRecord(1, "someone", "alice/repo", at(1), at(2), at(2)),
            PullRecord(2, "bob", None, at(1), at(2), at(2)),  # head fork deleted
            PullRecord(3, "carol", "carol-other/repo", at(1), at(2)),  # head exists elsewhere: no fallback
        ]
        report = split_contribution(snapshot([a, b, c], pulls), [a, b, c])
        assert (report.contributing, report.independent) == (2, 1)
        assert report.pdi == 2

    def test_undefined_when_no_independent(self):
        a = gap_fork("alice", 5)
        report = split_contribution(snapshot([a], [PullRecord(1, "x", "alice/repo", at(1))]), [a])
        assert report.independent == 0 and report.pdi is None

    @pytest.mark.parametrize("contributing,independent,expected", [(23, 1605, "0.0143"), (387, 177, "2.1864")])
    def test_published_pdi_values(self, contributing, independent, expected):
        from waste_radar.fork_analysis import DiversificationReport
        from waste_radar.reporting import fmt4

        report = DiversificationReport(contributing, independent)
        assert fmt4(report.pdi) == expected
        assert report.pdi * independent == contributing


def test_zhou_rule_comparison():
    forks = [
        fork("old", PARENT - timedelta(days=800), PARENT - timedelta(days=10), "A fork of repo"),
        fork("young", PARENT - timedelta(days=100), PARENT - timedelta(days=10), "fork of repo"),
        fork("plain", PARENT - timedelta(days=800), PARENT - timedelta(days=10), "my tools"),
    ]
    assert zhou_independent_forks(snapshot(forks)) == ["old/repo"]
