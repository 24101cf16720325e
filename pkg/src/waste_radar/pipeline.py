"""Per-repository analysis bundle: every measure computed from one snapshot."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, time, timedelta, timezone
from pathlib import Path
from typing import Any

from .backlog_analysis import (
    BacklogInversionReport,
    FfrBinSeries,
    KindFlow,
    PrRejectionReport,
    SprintFlow,
    backlog_inversion,
    ffr_bins,
    inflow_outflow,
    pr_rejection_rate,
)
from .config import RunConfig
from .fork_analysis import (
    DiversificationReport,
    ForkClass,
    ForkClassification,
    ForkDistribution,
    classify_forks,
    split_contribution,
    zhou_independent_forks,
)
from .snapshot import IssueKind, RepoRef, RepoSnapshot, format_timestamp, load_snapshot, parse_timestamp, snapshot_path

log = logging.getLogger(__name__)

BUNDLE_VERSION = 1


class MissingSnapshotError(FileNotFoundError):
    pass


@dataclass(frozen=True)
class RepoBundle:
    repo: RepoRef
    anchor: datetime
    forks: ForkClassification
    diversification: DiversificationReport
    prr: PrRejectionReport
    bi: BacklogInversionReport
    ffr: tuple[FfrBinSeries, ...]
    flow: tuple[SprintFlow, ...]
    zhou_independent: tuple[str, ...] | None = None


def default_anchor(snapshot: RepoSnapshot) -> datetime:
    return datetime.combine(snapshot.fetched_at.date(), time(), tzinfo=timezone.utc)


def analyze_snapshot(snapshot: RepoSnapshot, config: RunConfig) -> RepoBundle:
    snapshot = snapshot.reclassified(config.label_mapping)
    if config.anchor_date is not None:
        anchor = datetime.combine(config.anchor_date, time(), tzinfo=timezone.utc)
    else:
        anchor = default_anchor(snapshot)
    forks = classify_forks(snapshot, timedelta(days=config.active_window_days))
    return RepoBundle(
        repo=snapshot.repo,
        anchor=anchor,
        forks=forks,
        diversification=split_contribution(snapshot, forks.forks_of(snapshot, ForkClass.ACTIVE)),
        prr=pr_rejection_rate(snapshot.pulls),
        bi=backlog_inversion(snapshot.issues),
        ffr=tuple(ffr_bins(snapshot.issues)),
        flow=tuple(inflow_outflow(snapshot.issues, anchor, config.sprint_days, config.sprint_count)),
        zhou_independent=tuple(zhou_independent_forks(snapshot)) if config.compare_zhou else None,
    )


def load_repo_snapshot(config: RunConfig, repo: RepoRef) -> RepoSnapshot:
    path = snapshot_path(config.snapshot_dir, repo)
    if not path.exists():
        raise MissingSnapshotError(f"no snapshot for {repo} at {path}")
    return load_snapshot(path)


def cmd_analyze(config: RunConfig) -> list[RepoBundle]:
    """Analyze every configured repository; results follow config order."""

    def one(repo: RepoRef) -> RepoBundle:
        return analyze_snapshot(load_repo_snapshot(config, repo), config)

    with ThreadPoolExecutor(config.workers) as pool:
        return list(pool.map(one, config.repos))


# -- JSON form ----------------------------------------------------------------


def _ratio(value) -> float | None:
    return None if value is None else float(value)


def bundle_to_dict(bundle: RepoBundle) -> dict[str, Any]:
    dist = bundle.forks.distribution
    return {
        "bundle_version": BUNDLE_VERSION,
        "repo": bundle.repo.full_name,
        "anchor": format_timestamp(bundle.anchor),
        "fork_distribution": {
            "counts": {cls.value: dist.counts[cls] for cls in ForkClass},
            "percentages": {cls.value: pct for cls, pct in dist.percentages.items()},
            "total": dist.total,
        },
        "forks": [
            {"full_name": name, "class": bundle.forks.classes[name].value, "gap_days": bundle.forks.gaps[name]}
            for name in sorted(bundle.forks.classes)
        ],
        "diversification": {
            "contributing": bundle.diversification.contributing,
            "independent": bundle.diversification.independent,
            "pdi": _ratio(bundle.diversification.pdi),
        },
        "pr_rejection": {"merged": bundle.prr.merged, "unmerged": bundle.prr.unmerged, "ratio": _ratio(bundle.prr.ratio)},
        "backlog_inversion": {
            "high_low": bundle.bi.high_low,
            "high_medium": bundle.bi.high_medium,
            "medium_low": bundle.bi.medium_low,
            "total_closed_issues": bundle.bi.total_closed_issues,
            "bi_index": float(bundle.bi.bi_index),
        },
        "ffr_bins": [
            {"bin": list(s.bin), "kind": s.kind.value, "total": s.total, "points": [[a, c] for a, c in s.points]}
            for s in bundle.ffr
        ],
        "flow": [
            {
                "sprint_index": f.sprint_index,
                "window_start": format_timestamp(f.start),
                "window_end": format_timestamp(f.end),
                "kinds": {
                    kind.value: {"inflow": k.inflow, "spillover": k.spillover, "outflow": k.outflow, "ratio": k.ratio}
                    for kind, k in f.flows.items()
                },
            }
            for f in bundle.flow
        ],
        "zhou_independent": None if bundle.zhou_independent is None else list(bundle.zhou_independent),
    }


def bundle_from_dict(data: dict[str, Any]) -> RepoBundle:
    """Rebuild a bundle; derived values (percentages, ratios) are recomputed from counts."""
    if data.get("bundle_version") != BUNDLE_VERSION:
        raise ValueError(f"unsupported bundle version {data.get('bundle_version')!r}")
    counts = {ForkClass(k): int(v) for k, v in data["fork_distribution"]["counts"].items()}
    forks = ForkClassification(
        ForkDistribution(counts, sum(counts.values())),
        {f["full_name"]: ForkClass(f["class"]) for f in data["forks"]},
        {f["full_name"]: float(f["gap_days"]) for f in data["forks"]},
    )
    div, prr, bi = data["diversification"], data["pr_rejection"], data["backlog_inversion"]
    return RepoBundle(
        repo=RepoRef.parse(data["repo"]),
        anchor=parse_timestamp(data["anchor"]),
        forks=forks,
        diversification=DiversificationReport(div["contributing"], div["independent"]),
        prr=PrRejectionReport(prr["merged"], prr["unmerged"]),
        bi=BacklogInversionReport(bi["high_low"], bi["high_medium"], bi["medium_low"], bi["total_closed_issues"]),
        ffr=tuple(
            FfrBinSeries(tuple(s["bin"]), IssueKind(s["kind"]), tuple((int(a), float(c)) for a, c in s["points"]), s["total"])
            for s in data["ffr_bins"]
        ),
        flow=tuple(
            SprintFlow(
                f["sprint_index"],
                parse_timestamp(f["window_start"]),
                parse_timestamp(f["window_end"]),
                {IssueKind(k): KindFlow(v["inflow"], v["spillover"], v["outflow"]) for k, v in f["kinds"].items()},
            )
            for f in data["flow"]
        ),
        zhou_independent=None if data.get("zhou_independent") is None else tuple(data["zhou_independent"]),
    )


def bundle_path(directory: Path, repo: RepoRef) -> Path:
    return Path(directory) / f"{repo.slug}.bundle.json"
