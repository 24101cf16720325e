"""Regenerate the committed test fixture corpus.

    python scripts/make_fixtures.py            # writes tests/fixtures/{http,snapshots}
    python scripts/make_fixtures.py --golden   # also refreshes golden bundles

Everything is seeded, so reruns produce identical files.
"""

from __future__ import annotations

import argparse
import json
import random
import shutil
from datetime import datetime, timedelta, timezone
from pathlib import Path

from waste_radar.config import RunConfig
from waste_radar.github_ingest import Response, write_fixture
from waste_radar.pipeline import analyze_snapshot, bundle_to_dict
from waste_radar.reporting import dumps_json
from waste_radar.snapshot import (
    ForkRecord,
    IssueRecord,
    PullRecord,
    RepoFlags,
    RepoRef,
    RepoSnapshot,
    classify_issue,
    format_timestamp,
    save_snapshot,
    snapshot_path,
)

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
API = "https://api.github.com"
UTC = timezone.utc
PARENT_PUSHED = datetime(2024, 4, 30, 12, 0, 0, tzinfo=UTC)
FETCHED = datetime(2024, 5, 1, 9, 30, 0, tzinfo=UTC)


def ts(dt: datetime) -> str:
    return format_timestamp(dt)


# -- recorded HTTP responses ---------------------------------------------------


def repo_payload(owner: str, name: str, forks: int) -> dict:
    return {
        "full_name": f"{owner}/{name}",
        "name": name,
        "owner": {"login": owner},
        "created_at": "2015-03-01T10:00:00Z",
        "pushed_at": ts(PARENT_PUSHED),
        "archived": False,
        "is_template": False,
        "fork": False,
        "has_issues": True,
        "has_downloads": True,
        "stargazers_count": 61234,
        "forks_count": forks,
    }


def link(path: str, params: dict, page: int, last: int) -> str:
    rels = []
    query = "&".join(f"{k}={v}" for k, v in sorted(params.items()))
    if page < last:
        rels.append(f'<{API}{path}?{query}&page={page + 1}>; rel="next"')
    rels.append(f'<{API}{path}?{query}&page={last}>; rel="last"')
    if page > 1:
        rels.append(f'<{API}{path}?{query}&page=1>; rel="first"')
    return ", ".join(rels)


def write_pages(directory: Path, path: str, params: dict, items: list, per_page: int = 100) -> None:
    pages = [items[i : i + per_page] for i in range(0, len(items), per_page)] or [[]]
    for n, body in enumerate(pages, start=1):
        headers = {"x-ratelimit-remaining": "4999", "x-ratelimit-reset": "1714560000"}
        if len(pages) > 1:
            headers["link"] = link(path, {**params, "per_page": per_page}, n, len(pages))
        write_fixture(directory, path, {**params, "per_page": per_page, "page": n}, Response(200, headers, body))


def make_http(directory: Path, rng: random.Random) -> None:
    if directory.exists():
        shutil.rmtree(directory)
    directory.mkdir(parents=True)

    # acme/widgets: 2 pages of forks, 120 closed PRs, issues mixed with PRs
    base = "/repos/acme/widgets"
    write_fixture(directory, base, None, Response(200, {}, repo_payload("acme", "widgets", 200)))
    forks = []
    for i in range(200):
        created = datetime(2020, 1, 1, tzinfo=UTC) + timedelta(days=i * 3)
        pushed = created + timedelta(days=rng.randint(-2, 900))
        forks.append(
            {
                "full_name": f"user{i:03d}/widgets",
                "owner": {"login": f"user{i:03d}"},
                "created_at": ts(created),
                "pushed_at": ts(pushed),
                "description": "fork of widgets" if i % 50 == 0 else None,
            }
        )
    write_pages(directory, f"{base}/forks", {"sort": "oldest"}, forks)

    pulls = []
    for n in range(120, 0, -1):  # newest first, as the API returns with direction=desc
        created = datetime(2023, 1, 1, tzinfo=UTC) + timedelta(hours=n * 30)
        closed = created + timedelta(days=2)
        merged = closed if n % 3 else None
        head = {"repo": {"full_name": f"user{n:03d}/widgets"}} if n % 7 else {"repo": None}
        pulls.append(
            {
                "number": n,
                "state": "closed",
                "user": {"login": f"user{n:03d}"},
                "head": head,
                "created_at": ts(created),
                "closed_at": ts(closed),
                "merged_at": ts(merged) if merged else None,
            }
        )
    write_pages(directory, f"{base}/pulls", {"state": "closed", "sort": "created", "direction": "desc"}, pulls)

    # 150 entries of which every fifth is a pull request -> 120 real issues
    label_pool = [[], ["bug"], ["enhancement"], ["bug", "priority: high"], ["feature", "P2"], ["question"]]
    issues = []
    for n in range(150, 0, -1):
        created = datetime(2022, 6, 1, tzinfo=UTC) + timedelta(hours=n * 40)
        closed = created + timedelta(days=rng.randint(0, 200)) if n % 4 else None
        item = {
            "number": 1000 + n,
            "state": "closed" if closed else "open",
            "created_at": ts(created),
            "closed_at": ts(closed) if closed else None,
            "labels": [{"name": name} for name in label_pool[n % len(label_pool)]],
        }
        if n % 5 == 0:
            item["pull_request"] = {"url": f"{API}{base}/pulls/{1000 + n}"}
        issues.append(item)
    write_pages(directory, f"{base}/issues", {"state": "all", "sort": "created", "direction": "desc"}, issues)

    # acme/empty: nothing at all
    base = "/repos/acme/empty"
    write_fixture(directory, base, None, Response(200, {}, repo_payload("acme", "empty", 0)))
    write_pages(directory, f"{base}/forks", {"sort": "oldest"}, [])
    write_pages(directory, f"{base}/pulls", {"state": "closed", "sort": "created", "direction": "desc"}, [])
    write_pages(directory, f"{base}/issues", {"state": "all", "sort": "created", "direction": "desc"}, [])

    # acme/gone: deleted repository
    write_fixture(directory, "/repos/acme/gone", None, Response(404, {}, {"message": "Not Found"}))


# -- snapshot corpus -----------------------------------------------------------


def r0_shaped(rng: random.Random) -> RepoSnapshot:
    """Smallest counts that render the R0 summary row: (3.7844, 0.0143, 0.7233, 0).

    33 of 872 forks inactive, 2 of 141 active forks contributing, 149
    unmerged against 206 merged PRs, no backlog inversions.
    """
    forks = []
    for i in range(698):
        created = datetime(2014, 1, 1, tzinfo=UTC) + timedelta(hours=i * 97)
        forks.append(ForkRecord(f"backup{i:03d}/bootstrap", f"backup{i:03d}", created, created - timedelta(days=rng.randint(1, 400))))
    for i in range(141):
        pushed = PARENT_PUSHED - timedelta(days=rng.uniform(0, 89.9))
        forks.append(ForkRecord(f"active{i:03d}/bootstrap", f"active{i:03d}", pushed - timedelta(days=rng.randint(1, 700)), pushed))
    for i in range(33):
        gap = rng.uniform(95, 300) if i < 20 else rng.uniform(900, 1600)
        pushed = PARENT_PUSHED - timedelta(days=gap)
        forks.append(ForkRecord(f"idle{i:03d}/bootstrap", f"idle{i:03d}", pushed - timedelta(days=30), pushed))

    pulls = []
    for n in range(1, 356):
        created = datetime(2019, 1, 1, tzinfo=UTC) + timedelta(hours=n * 50)
        closed = created + timedelta(days=3)
        merged = closed if n <= 206 else None
        if n in (5, 300):
            head = f"active{n % 141:03d}/bootstrap"
        elif n % 11 == 0:
            head = None
        else:
            head = f"contrib{n:03d}/bootstrap"
        pulls.append(PullRecord(n, f"contrib{n:03d}", head, created, closed, merged))

    issues = []
    for n in range(1, 241):
        created = FETCHED - timedelta(days=900) + timedelta(hours=n * 85)
        labels = [("bug",), ("enhancement",), ("question",), ("bug", "priority: low")][n % 4]
        closed = created + timedelta(days=rng.choice([0, 1, 3, 6, 12, 29, 45, 100, 150, 200])) if n % 6 else None
        if closed and closed > FETCHED:
            closed = None
        priority, kind = classify_issue(labels)
        issues.append(IssueRecord(n, created, closed, labels, priority, kind))

    return RepoSnapshot(
        RepoRef("fixture", "r0-shaped"),
        PARENT_PUSHED,
        FETCHED,
        datetime(2011, 7, 29, tzinfo=UTC),
        RepoFlags(),
        stargazers=167000,
        fork_count=len(forks),
        forks=tuple(forks),
        pulls=tuple(pulls),
        issues=tuple(issues),
    )


def backlog_demo(rng: random.Random) -> RepoSnapshot:
    """Mixed priorities and kinds over ~2.5 years so every chart has data."""
    forks = []
    for i in range(60):
        created = datetime(2021, 1, 1, tzinfo=UTC) + timedelta(days=i * 11)
        if i % 4 == 0:
            pushed = created - timedelta(days=5)
        else:
            pushed = PARENT_PUSHED - timedelta(days=rng.choice([rng.uniform(0, 80), rng.uniform(100, 200), rng.uniform(600, 900)]))
            created = min(created, pushed - timedelta(days=1))
        forks.append(ForkRecord(f"dev{i:02d}/demo", f"dev{i:02d}", created, pushed))
    pulls = []
    for n in range(1, 81):
        created = datetime(2023, 1, 1, tzinfo=UTC) + timedelta(days=n * 4)
        closed = created + timedelta(days=1)
        head = f"dev{n % 60:02d}/demo" if n % 9 == 0 else (None if n % 13 == 0 else f"other{n}/demo")
        pulls.append(PullRecord(n, f"dev{n % 60:02d}" if head is None else f"other{n}", head, created, closed, closed if n % 2 else None))
    label_sets = [
        ("bug", "priority: high"),
        ("bug", "priority: medium"),
        ("bug", "priority: low"),
        ("enhancement", "p1"),
        ("feature", "p2"),
        ("enhancement", "p0"),
        ("bug",),
        ("documentation",),
    ]
    issues = []
    start = FETCHED - timedelta(days=60 * 14 + 30)
    for n in range(1, 501):
        created = start + timedelta(hours=rng.uniform(0, (60 * 14 + 25) * 24))
        created = created.replace(microsecond=0)
        labels = label_sets[rng.randrange(len(label_sets))]
        closed = None
        if rng.random() < 0.8:
            closed = (created + timedelta(days=rng.expovariate(1 / 25))).replace(microsecond=0)
            if closed > FETCHED:
                closed = None
        priority, kind = classify_issue(labels)
        issues.append(IssueRecord(n, created, closed, labels, priority, kind))
    return RepoSnapshot(
        RepoRef("fixture", "backlog-demo"),
        PARENT_PUSHED,
        FETCHED,
        datetime(2020, 6, 1, tzinfo=UTC),
        RepoFlags(),
        stargazers=1234,
        fork_count=len(forks),
        forks=tuple(forks),
        pulls=tuple(pulls),
        issues=tuple(issues),
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--golden", action="store_true", help="also rewrite golden bundles")
    args = parser.parse_args()

    make_http(FIXTURES / "http", random.Random(7))
    snap_dir = FIXTURES / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    snapshots = [r0_shaped(random.Random(11)), backlog_demo(random.Random(13))]
    for snap in snapshots:
        save_snapshot(snap, snapshot_path(snap_dir, snap.repo))
    config = {"repos": [s.repo.full_name for s in snapshots], "snapshot_dir": "snapshots"}
    (FIXTURES / "corpus.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")

    if args.golden:
        golden = FIXTURES / "golden"
        golden.mkdir(exist_ok=True)
        run = RunConfig(repos=[s.repo for s in snapshots])
        for snap in snapshots:
            bundle = analyze_snapshot(snap, run)
            (golden / f"{snap.repo.slug}.bundle.json").write_text(dumps_json(bundle_to_dict(bundle)), encoding="utf-8")
    print(f"fixtures written under {FIXTURES}")


if __name__ == "__main__":
    main()
