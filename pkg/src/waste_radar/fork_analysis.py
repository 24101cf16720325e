"""Fork classification (backup / active / potentially stale / stale) and the
project diversification index over active forks."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from datetime import datetime, timedelta
from fractions import Fraction
from typing import Sequence

from .snapshot import ForkRecord, RepoSnapshot

SECONDS_PER_DAY = 86_400
ACTIVE_WINDOW = timedelta(days=90)


class ForkClass(str, enum.Enum):
    BACKUP = "Backup"
    ACTIVE = "Active"
    POTENTIALLY_STALE = "PotentiallyStale"
    STALE = "Stale"


@dataclass(frozen=True)
class ForkDistribution:
    counts: dict[ForkClass, int]
    total: int

    @classmethod
    def from_counts(cls, active: int, backup: int, potentially_stale: int, stale: int) -> "ForkDistribution":
        counts = {
            ForkClass.ACTIVE: active,
            ForkClass.BACKUP: backup,
            ForkClass.POTENTIALLY_STALE: potentially_stale,
            ForkClass.STALE: stale,
        }
        return cls(counts, sum(counts.values()))

    def fraction(self, cls: ForkClass) -> Fraction | None:
        """Exact percentage (0-100) of one class; None when there are no forks."""
        if self.total == 0:
            return None
        return Fraction(100 * self.counts[cls], self.total)

    @property
    def percentages(self) -> dict[ForkClass, float]:
        if self.total == 0:
            return {}
        return {cls: float(self.fraction(cls)) for cls in ForkClass}

    @property
    def stale_and_potentially_stale(self) -> Fraction | None:
        if self.total == 0:
            return None
        return self.fraction(ForkClass.POTENTIALLY_STALE) + self.fraction(ForkClass.STALE)


@dataclass(frozen=True)
class DiversificationReport:
    contributing: int
    independent: int

    @property
    def pdi(self) -> Fraction | None:
        """contributing / independent; undefined (None) when independent is 0."""
        if self.independent == 0:
            return None
        return Fraction(self.contributing, self.independent)


@dataclass(frozen=True)
class KMeansResult:
    assignments: tuple[int, ...]
    centroids: tuple[float, float]
    iterations: int
    converged: bool


def is_backup(fork: ForkRecord) -> bool:
    return fork.pushed_at < fork.created_at


def is_active(fork: ForkRecord, parent_pushed_at: datetime, window: timedelta = ACTIVE_WINDOW) -> bool:
    # timedelta comparison is exact to the microsecond; a fork ahead of the parent counts as active
    return parent_pushed_at - fork.pushed_at < window


def gap_days(fork: ForkRecord, parent_pushed_at: datetime) -> float:
    return (parent_pushed_at - fork.pushed_at).total_seconds() / SECONDS_PER_DAY


# -- 1-D two-means ------------------------------------------------------------


def _assign(values: Sequence[float], c0: float, c1: float) -> list[int]:
    return [0 if abs(v - c0) <= abs(v - c1) else 1 for v in values]


def _lloyd(values: Sequence[float], c0: float, c1: float, tol: float, max_iter: int):
    iterations = 0
    converged = False
    while iterations < max_iter:
        iterations += 1
        assignment = _assign(values, c0, c1)
        left = [v for v, a in zip(values, assignment) if a == 0]
        right = [v for v, a in zip(values, assignment) if a == 1]
        n0 = sum(left) / len(left) if left else c0
        n1 = sum(right) / len(right) if right else c1
        moved = max(abs(n0 - c0), abs(n1 - c1))
        c0, c1 = n0, n1
        if moved < tol:
            converged = True
            break
    return c0, c1, iterations, converged


def _best_threshold(sorted_values: Sequence[float]) -> tuple[int, Fraction] | None:
    """Exact optimal split point of sorted values: (left size, within-cluster SSE).

    Only positions between distinct values are candidates; equal SSE keeps the
    lowest threshold.
    """
    xs = [Fraction(v) for v in sorted_values]
    n = len(xs)
    total = sum(xs)
    total_sq = sum(x * x for x in xs)
    best = None
    s = sq = Fraction(0)
    for k in range(1, n):
        s += xs[k - 1]
        sq += xs[k - 1] * xs[k - 1]
        if xs[k] == xs[k - 1]:
            continue
        rs, rsq = total - s, total_sq - sq
        sse = (sq - s * s / k) + (rsq - rs * rs / (n - k))
        if best is None or sse < best[1]:
            best = (k, sse)
    return best


def _sse_of_assignment(values: Sequence[float], assignment: Sequence[int]) -> Fraction:
    result = Fraction(0)
    for cluster in (0, 1):
        xs = [Fraction(v) for v, a in zip(values, assignment) if a == cluster]
        if xs:
            mean = sum(xs) / len(xs)
            result += sum((x - mean) ** 2 for x in xs)
    return result


def kmeans_two(values: Sequence[float], tol: float = 1e-6, max_iter: int = 100) -> KMeansResult:
    """Deterministic two-cluster k-means on a line.

    Lloyd iteration starts from (min, max). Lloyd can settle in a local optimum,
    so the result is checked against an exact scan of all threshold splits and
    replaced by the optimal split when Lloyd's split costs more.
    """
    if not values:
        raise ValueError("kmeans_two needs at least one value")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    values = [float(v) for v in values]
    lo, hi = min(values), max(values)
    if lo == hi:
        return KMeansResult(tuple(0 for _ in values), (lo, hi), 1, True)

    c0, c1, iterations, converged = _lloyd(values, lo, hi, tol, max_iter)
    assignment = _assign(values, c0, c1)

    ordered = sorted(values)
    k, best_sse = _best_threshold(ordered)
    threshold = ordered[k - 1]
    optimal = [0 if v <= threshold else 1 for v in values]
    # equal-cost splits resolve to the lowest threshold
    if optimal != assignment and best_sse <= _sse_of_assignment(values, assignment):
        assignment = optimal
        left = [v for v in values if v <= threshold]
        right = [v for v in values if v > threshold]
        c0, c1 = sum(left) / len(left), sum(right) / len(right)
        converged = True
        iterations += 1
    return KMeansResult(tuple(assignment), (c0, c1), iterations, converged)


# -- classification -----------------------------------------------------------


@dataclass(frozen=True)
class ForkClassification:
    distribution: ForkDistribution
    classes: dict[str, ForkClass]
    gaps: dict[str, float]

    def forks_of(self, snapshot: RepoSnapshot, cls: ForkClass) -> list[ForkRecord]:
        return [f for f in snapshot.forks if self.classes[f.full_name] is cls]


def classify_forks(snapshot: RepoSnapshot, window: timedelta = ACTIVE_WINDOW) -> ForkClassification:
    parent = snapshot.parent_pushed_at
    classes: dict[str, ForkClass] = {}
    gaps = {f.full_name: gap_days(f, parent) for f in snapshot.forks}
    inactive: list[ForkRecord] = []
    for fork in snapshot.forks:
        if is_backup(fork):
            classes[fork.full_name] = ForkClass.BACKUP
        elif is_active(fork, parent, window):
            classes[fork.full_name] = ForkClass.ACTIVE
        else:
            inactive.append(fork)

    if len(inactive) < 2:
        for fork in inactive:
            classes[fork.full_name] = ForkClass.POTENTIALLY_STALE
    else:
        result = kmeans_two([gaps[f.full_name] for f in inactive])
        for fork, cluster in zip(inactive, result.assignments):
            classes[fork.full_name] = ForkClass.POTENTIALLY_STALE if cluster == 0 else ForkClass.STALE

    counts = {cls: 0 for cls in ForkClass}
    for cls in classes.values():
        counts[cls] += 1
    return ForkClassification(ForkDistribution(counts, len(classes)), classes, gaps)


def split_contribution(snapshot: RepoSnapshot, active_forks: Sequence[ForkRecord]) -> DiversificationReport:
    heads = {p.head_repo_full_name.lower() for p in snapshot.pulls if p.head_repo_full_name}
    # author fallback only applies to PRs whose head repository no longer exists
    orphan_authors = {p.author.lower() for p in snapshot.pulls if not p.head_repo_full_name}
    contributing = 0
    for fork in active_forks:
        if fork.full_name.lower() in heads or fork.owner.lower() in orphan_authors:
            contributing += 1
    return DiversificationReport(contributing, len(active_forks) - contributing)


def zhou_independent_forks(snapshot: RepoSnapshot, min_activity: timedelta = timedelta(days=365)) -> list[str]:
    """Forks passing the older description/activity rule, kept for comparison output."""
    return [
        f.full_name
        for f in snapshot.forks
        if f.description and "fork of" in f.description.lower() and f.pushed_at - f.created_at >= min_activity
    ]
