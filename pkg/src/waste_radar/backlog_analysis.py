"""PR rejection rate, backlog inversion index and feature fulfillment artifacts."""

from __future__ import annotations

import bisect
import logging
import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from fractions import Fraction
from typing import Iterable, Sequence

from .snapshot import IssueKind, IssueRecord, Priority, PullRecord

log = logging.getLogger(__name__)

FFR_BINS: tuple[tuple[int, int], ...] = ((0, 5), (5, 30), (30, 90), (90, 180))
FLOW_KINDS = (IssueKind.BUG, IssueKind.FEATURE)


@dataclass(frozen=True)
class PrRejectionReport:
    merged: int
    unmerged: int

    @property
    def ratio(self) -> Fraction | None:
        if self.merged == 0:
            return None
        return Fraction(self.unmerged, self.merged)


def pr_rejection_rate(pulls: Iterable[PullRecord]) -> PrRejectionReport:
    merged = unmerged = 0
    for pull in pulls:
        if not pull.is_closed:
            continue
        if pull.is_merged:
            merged += 1
        else:
            unmerged += 1
    return PrRejectionReport(merged, unmerged)


# -- backlog inversion --------------------------------------------------------


@dataclass(frozen=True)
class BacklogInversionReport:
    high_low: int
    high_medium: int
    medium_low: int
    total_closed_issues: int

    @property
    def events(self) -> int:
        return self.high_low + self.high_medium + self.medium_low

    @property
    def bi_index(self) -> Fraction:
        if self.total_closed_issues == 0:
            return Fraction(0)
        return Fraction(self.events, 3 * self.total_closed_issues)


class _Fenwick:
    def __init__(self, size: int):
        self.tree = [0] * (size + 1)

    def add(self, i: int) -> None:
        i += 1
        while i < len(self.tree):
            self.tree[i] += 1
            i += i & -i

    def prefix(self, i: int) -> int:
        """Number of inserted positions < i."""
        total = 0
        while i > 0:
            total += self.tree[i]
            i -= i & -i
        return total


def _count_inversions(higher: Sequence[IssueRecord], lower: Sequence[IssueRecord]) -> int:
    """Pairs (h, l) with h created before l, l closed, and h still open when l closed.

    Sweep by creation time; a Fenwick tree over closure times counts the earlier
    higher-priority issues whose closure falls after l's.
    """
    closed_lower = [i for i in lower if i.closed_at is not None]
    if not higher or not closed_lower:
        return 0
    # open issues get a key past every real closure
    keys = sorted({i.closed_at for i in higher if i.closed_at is not None})
    open_pos = len(keys)

    def key_pos(issue: IssueRecord) -> int:
        return open_pos if issue.closed_at is None else bisect.bisect_left(keys, issue.closed_at)

    # queries sort before insertions at an equal creation time: creation must be strictly earlier
    events = [(i.created_at, 1, key_pos(i), None) for i in higher]
    events += [(i.created_at, 0, None, i.closed_at) for i in closed_lower]
    events.sort(key=lambda e: (e[0], e[1]))
    tree = _Fenwick(open_pos + 1)
    inserted = 0
    pairs = 0
    for _, is_insert, pos, closed_at in events:
        if is_insert:
            tree.add(pos)
            inserted += 1
        else:
            # entries with closure <= closed_at sit strictly left of bisect_right
            pairs += inserted - tree.prefix(bisect.bisect_right(keys, closed_at))
    return pairs


def backlog_inversion(issues: Iterable[IssueRecord]) -> BacklogInversionReport:
    issues = list(issues)
    by_priority = {p: [i for i in issues if i.priority is p] for p in (Priority.HIGH, Priority.MEDIUM, Priority.LOW)}
    closed = sum(1 for i in issues if i.is_closed)
    if closed == 0:
        log.warning("backlog inversion: no closed issues, index reported as 0")
    return BacklogInversionReport(
        high_low=_count_inversions(by_priority[Priority.HIGH], by_priority[Priority.LOW]),
        high_medium=_count_inversions(by_priority[Priority.HIGH], by_priority[Priority.MEDIUM]),
        medium_low=_count_inversions(by_priority[Priority.MEDIUM], by_priority[Priority.LOW]),
        total_closed_issues=closed,
    )


# -- feature fulfillment ------------------------------------------------------


@dataclass(frozen=True)
class FfrBinSeries:
    bin: tuple[int, int]
    kind: IssueKind
    points: tuple[tuple[int, float], ...]
    total: int

    @property
    def label(self) -> str:
        return f"[{self.bin[0]},{self.bin[1]})"


def closure_age_days(issue: IssueRecord) -> int:
    return math.floor((issue.closed_at - issue.created_at).total_seconds() / 86_400)


def bin_of(age: int) -> tuple[int, int] | None:
    for lo, hi in FFR_BINS:
        if lo <= age < hi:
            return (lo, hi)
    return None


def ffr_bins(issues: Iterable[IssueRecord]) -> list[FfrBinSeries]:
    """Closure-age histograms per (bin, kind), each normalized to sum to 1.

    Every (bin, kind) pair for Bug and Feature is returned, empty ones with no
    points, in bin order then kind order.
    """
    ages: dict[tuple[tuple[int, int], IssueKind], Counter] = {
        (b, k): Counter() for b in FFR_BINS for k in FLOW_KINDS
    }
    for issue in issues:
        if issue.closed_at is None or issue.kind not in FLOW_KINDS:
            continue
        age = closure_age_days(issue)
        b = bin_of(age)
        if b is not None:
            ages[(b, issue.kind)][age] += 1
    series = []
    for (b, kind), counter in ages.items():
        total = sum(counter.values())
        points = tuple((age, counter[age] / total) for age in sorted(counter))
        series.append(FfrBinSeries(b, kind, points, total))
    return series


@dataclass(frozen=True)
class KindFlow:
    inflow: int
    spillover: int
    outflow: int

    @property
    def ratio(self) -> float | None:
        denominator = self.inflow + self.spillover
        if denominator == 0:
            return None
        return self.outflow / denominator


@dataclass(frozen=True)
class SprintFlow:
    sprint_index: int
    start: datetime
    end: datetime
    flows: dict[IssueKind, KindFlow]


def _in(ts: datetime | None, start: datetime, end: datetime) -> bool:
    return ts is not None and start <= ts < end


def sprint_windows(anchor: datetime, sprint_days: int = 14, sprints: int = 60) -> list[tuple[datetime, datetime]]:
    length = timedelta(days=sprint_days)
    return [(anchor - k * length, anchor - (k - 1) * length) for k in range(sprints, 0, -1)]


def inflow_outflow(
    issues: Iterable[IssueRecord],
    anchor: datetime,
    sprint_days: int = 14,
    sprints: int = 60,
) -> list[SprintFlow]:
    if sprint_days < 1 or sprints < 1:
        raise ValueError("sprint_days and sprints must be positive")
    issues = list(issues)
    by_kind = {k: [i for i in issues if i.kind is k] for k in FLOW_KINDS}
    length = timedelta(days=sprint_days)
    result = []
    for index, (start, end) in enumerate(sprint_windows(anchor, sprint_days, sprints)):
        previous = start - length
        flows = {}
        for kind, items in by_kind.items():
            inflow = sum(1 for i in items if _in(i.created_at, start, end))
            outflow = sum(1 for i in items if _in(i.closed_at, start, end))
            spillover = sum(
                1
                for i in items
                if _in(i.created_at, previous, start) and (i.closed_at is None or i.closed_at >= start)
            )
            flows[kind] = KindFlow(inflow, spillover, outflow)
        result.append(SprintFlow(index, start, end, flows))
    return result
