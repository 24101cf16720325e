"""Repository metadata model and the on-disk snapshot format.

Snapshots are plain JSON documents so that every analysis can run offline
and produce byte-identical output for identical input.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

UTC = timezone.utc
FORMAT_VERSION = 1


class SnapshotError(ValueError):
    """Base class for snapshot problems."""


class SnapshotFormatError(SnapshotError):
    """The document is malformed; ``field`` names the offending location."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class SnapshotValidationError(SnapshotError):
    """A record violates one of the model invariants."""


class Priority(str, enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"
    UNSPECIFIED = "Unspecified"

    @property
    def rank(self) -> int | None:
        return _PRIORITY_RANK.get(self)


_PRIORITY_RANK = {Priority.HIGH: 3, Priority.MEDIUM: 2, Priority.LOW: 1}


class IssueKind(str, enum.Enum):
    BUG = "Bug"
    FEATURE = "Feature"
    OTHER = "Other"


# -- timestamps ---------------------------------------------------------------


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 string into an aware UTC datetime."""
    if not isinstance(value, str):
        raise ValueError(f"expected RFC 3339 string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp without UTC offset: {value!r}")
    return dt.astimezone(UTC)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(UTC).isoformat().replace("+00:00", "Z")


def _utc(dt: datetime, what: str) -> datetime:
    if not isinstance(dt, datetime):
        raise SnapshotValidationError(f"{what} must be a datetime")
    if dt.tzinfo is None:
        raise SnapshotValidationError(f"{what} must be timezone-aware")
    return dt.astimezone(UTC)


# -- records ------------------------------------------------------------------


@dataclass(frozen=True)
class RepoRef:
    owner: str
    name: str

    def __post_init__(self):
        for part in (self.owner, self.name):
            if not part or "/" in part:
                raise SnapshotValidationError(f"invalid repository reference {self.owner!r}/{self.name!r}")

    @classmethod
    def parse(cls, text: str) -> "RepoRef":
        owner, sep, name = text.strip().partition("/")
        if not sep:
            raise SnapshotValidationError(f"expected owner/name, got {text!r}")
        return cls(owner, name)

    @property
    def full_name(self) -> str:
        return f"{self.owner}/{self.name}"

    @property
    def slug(self) -> str:
        """Filesystem-safe identifier."""
        return f"{self.owner}__{self.name}"

    def __str__(self) -> str:
        return self.full_name


@dataclass(frozen=True)
class ForkRecord:
    full_name: str
    owner: str
    created_at: datetime
    pushed_at: datetime
    description: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "created_at", _utc(self.created_at, f"fork {self.full_name} created_at"))
        object.__setattr__(self, "pushed_at", _utc(self.pushed_at, f"fork {self.full_name} pushed_at"))


@dataclass(frozen=True)
class PullRecord:
    number: int
    author: str
    head_repo_full_name: str | None
    created_at: datetime
    closed_at: datetime | None = None
    merged_at: datetime | None = None

    def __post_init__(self):
        if self.number <= 0:
            raise SnapshotValidationError(f"pull number must be positive, got {self.number}")
        object.__setattr__(self, "created_at", _utc(self.created_at, f"pull #{self.number} created_at"))
        if self.closed_at is not None:
            object.__setattr__(self, "closed_at", _utc(self.closed_at, f"pull #{self.number} closed_at"))
        if self.merged_at is not None:
            object.__setattr__(self, "merged_at", _utc(self.merged_at, f"pull #{self.number} merged_at"))
            if self.closed_at is None:
                raise SnapshotValidationError(f"pull #{self.number}: merged_at present without closed_at")
            if self.merged_at > self.closed_at:
                raise SnapshotValidationError(f"pull #{self.number}: merged_at after closed_at")

    @property
    def is_closed(self) -> bool:
        return self.closed_at is not None

    @property
    def is_merged(self) -> bool:
        return self.merged_at is not None


@dataclass(frozen=True)
class IssueRecord:
    number: int
    created_at: datetime
    closed_at: datetime | None = None
    labels: tuple[str, ...] = ()
    priority: Priority = Priority.UNSPECIFIED
    kind: IssueKind = IssueKind.OTHER

    def __post_init__(self):
        if self.number <= 0:
            raise SnapshotValidationError(f"issue number must be positive, got {self.number}")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "priority", Priority(self.priority))
        object.__setattr__(self, "kind", IssueKind(self.kind))
        object.__setattr__(self, "created_at", _utc(self.created_at, f"issue #{self.number} created_at"))
        if self.closed_at is not None:
            closed = _utc(self.closed_at, f"issue #{self.number} closed_at")
            if closed < self.created_at:
                raise SnapshotValidationError(f"issue #{self.number}: closed_at precedes created_at")
            object.__setattr__(self, "closed_at", closed)

    @property
    def is_closed(self) -> bool:
        return self.closed_at is not None


@dataclass(frozen=True)
class RepoFlags:
    archived: bool = False
    is_template: bool = False
    is_fork: bool = False
    has_issues: bool = True
    has_downloads: bool = True


@dataclass(frozen=True)
class RepoSnapshot:
    repo: RepoRef
    parent_pushed_at: datetime
    fetched_at: datetime
    created_at: datetime
    flags: RepoFlags = field(default_factory=RepoFlags)
    stargazers: int = 0
    fork_count: int = 0
    forks: tuple[ForkRecord, ...] = ()
    pulls: tuple[PullRecord, ...] = ()
    issues: tuple[IssueRecord, ...] = ()

    def __post_init__(self):
        for name in ("parent_pushed_at", "fetched_at", "created_at"):
            object.__setattr__(self, name, _utc(getattr(self, name), f"{self.repo} {name}"))
        if self.fetched_at < self.created_at:
            raise SnapshotValidationError(f"{self.repo}: fetched_at precedes created_at")
        if self.stargazers < 0 or self.fork_count < 0:
            raise SnapshotValidationError(f"{self.repo}: negative counts")
        forks = tuple(sorted(self.forks, key=lambda f: f.full_name))
        pulls = tuple(sorted(self.pulls, key=lambda p: p.number))
        issues = tuple(sorted(self.issues, key=lambda i: i.number))
        _check_unique((f.full_name for f in forks), f"{self.repo} fork")
        _check_unique((p.number for p in pulls), f"{self.repo} pull")
        _check_unique((i.number for i in issues), f"{self.repo} issue")
        object.__setattr__(self, "forks", forks)
        object.__setattr__(self, "pulls", pulls)
        object.__setattr__(self, "issues", issues)

    def reclassified(self, mapping: "LabelMapping") -> "RepoSnapshot":
        """Return a copy whose issue priority/kind are re-derived from labels."""
        issues = []
        for issue in self.issues:
            priority, kind = classify_issue(issue.labels, mapping)
            issues.append(replace(issue, priority=priority, kind=kind))
        return replace(self, issues=tuple(issues))


def _check_unique(keys: Iterable, what: str) -> None:
    seen = set()
    for key in keys:
        if key in seen:
            raise SnapshotValidationError(f"duplicate {what} identifier {key!r}")
        seen.add(key)


# -- label classification -----------------------------------------------------


@dataclass(frozen=True)
class LabelMapping:
    """Ordered substring rules; the first rule matching any label wins."""

    priority_rules: tuple[tuple[str, Priority], ...]
    kind_rules: tuple[tuple[str, IssueKind], ...]

    def __post_init__(self):
        prio = tuple((str(p).lower(), Priority(v)) for p, v in self.priority_rules)
        kind = tuple((str(p).lower(), IssueKind(v)) for p, v in self.kind_rules)
        if any(not p for p, _ in prio + kind):
            raise SnapshotValidationError("label rule patterns must be non-empty")
        object.__setattr__(self, "priority_rules", prio)
        object.__setattr__(self, "kind_rules", kind)

    @classmethod
    def default(cls) -> "LabelMapping":
        return DEFAULT_LABEL_MAPPING

    def to_dict(self) -> dict[str, Any]:
        return {
            "priority_rules": [[p, v.value] for p, v in self.priority_rules],
            "kind_rules": [[p, v.value] for p, v in self.kind_rules],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LabelMapping":
        return cls(
            priority_rules=tuple((p, Priority(v)) for p, v in data.get("priority_rules", [])),
            kind_rules=tuple((p, IssueKind(v)) for p, v in data.get("kind_rules", [])),
        )


DEFAULT_LABEL_MAPPING = LabelMapping(
    priority_rules=(
        ("p0", Priority.HIGH),
        ("priority: critical", Priority.HIGH),
        ("priority: high", Priority.HIGH),
        ("p1", Priority.MEDIUM),
        ("priority: medium", Priority.MEDIUM),
        ("p2", Priority.LOW),
        ("p3", Priority.LOW),
        ("priority: low", Priority.LOW),
    ),
    kind_rules=(
        ("bug", IssueKind.BUG),
        ("feature", IssueKind.FEATURE),
        ("enhancement", IssueKind.FEATURE),
        ("feature request", IssueKind.FEATURE),
    ),
)


def _first_match(labels: list[str], rules, default):
    for pattern, value in rules:
        if any(pattern in label for label in labels):
            return value
    return default


def classify_issue(labels: Iterable[str], mapping: LabelMapping = DEFAULT_LABEL_MAPPING) -> tuple[Priority, IssueKind]:
    lowered = [label.lower() for label in labels]
    return (
        _first_match(lowered, mapping.priority_rules, Priority.UNSPECIFIED),
        _first_match(lowered, mapping.kind_rules, IssueKind.OTHER),
    )


# -- serialization ------------------------------------------------------------


def _opt_ts(dt: datetime | None) -> str | None:
    return None if dt is None else format_timestamp(dt)


def snapshot_to_dict(snapshot: RepoSnapshot) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "repo": {"owner": snapshot.repo.owner, "name": snapshot.repo.name},
        "meta": {
            "created_at": format_timestamp(snapshot.created_at),
            "parent_pushed_at": format_timestamp(snapshot.parent_pushed_at),
            "fetched_at": format_timestamp(snapshot.fetched_at),
            "flags": {
                "archived": snapshot.flags.archived,
                "is_template": snapshot.flags.is_template,
                "is_fork": snapshot.flags.is_fork,
                "has_issues": snapshot.flags.has_issues,
                "has_downloads": snapshot.flags.has_downloads,
            },
            "stargazers": snapshot.stargazers,
            "fork_count": snapshot.fork_count,
        },
        "forks": [
            {
                "full_name": f.full_name,
                "owner": f.owner,
                "created_at": format_timestamp(f.created_at),
                "pushed_at": format_timestamp(f.pushed_at),
                "description": f.description,
            }
            for f in snapshot.forks
        ],
        "pulls": [
            {
                "number": p.number,
                "author": p.author,
                "head_repo_full_name": p.head_repo_full_name,
                "created_at": format_timestamp(p.created_at),
                "closed_at": _opt_ts(p.closed_at),
                "merged_at": _opt_ts(p.merged_at),
            }
            for p in snapshot.pulls
        ],
        "issues": [
            {
                "number": i.number,
                "created_at": format_timestamp(i.created_at),
                "closed_at": _opt_ts(i.closed_at),
                "labels": list(i.labels),
                "priority": i.priority.value,
                "kind": i.kind.value,
            }
            for i in snapshot.issues
        ],
    }


def dumps_snapshot(snapshot: RepoSnapshot) -> str:
    return json.dumps(snapshot_to_dict(snapshot), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class _Reader:
    """Typed field access that reports the JSON path of any failure."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise SnapshotFormatError(path or "<root>", "expected an object")
        self.data = data
        self.path = path

    def _where(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, types, optional: bool = False):
        if key not in self.data:
            if optional:
                return None
            raise SnapshotFormatError(self._where(key), "missing field")
        value = self.data[key]
        if value is None and optional:
            return None
        # bool is an int subclass; keep them apart
        if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
            raise SnapshotFormatError(self._where(key), f"expected {types}, got bool")
        if not isinstance(value, types):
            raise SnapshotFormatError(self._where(key), f"expected {types}, got {type(value).__name__}")
        return value

    def ts(self, key: str, optional: bool = False) -> datetime | None:
        value = self.get(key, str, optional)
        if value is None:
            return None
        try:
            return parse_timestamp(value)
        except ValueError as exc:
            raise SnapshotFormatError(self._where(key), str(exc)) from None

    def sub(self, key: str) -> "_Reader":
        return _Reader(self.get(key, dict), self._where(key))

    def items(self, key: str) -> list["_Reader"]:
        return [_Reader(item, f"{self._where(key)}[{n}]") for n, item in enumerate(self.get(key, list))]


def snapshot_from_dict(data: Any) -> RepoSnapshot:
    root = _Reader(data, "")
    version = root.get("format_version", int)
    if version != FORMAT_VERSION:
        raise SnapshotFormatError("format_version", f"unsupported version {version}")
    repo = root.sub("repo")
    meta = root.sub("meta")
    flags = meta.sub("flags")

    def enum_field(reader: _Reader, key: str, enum_cls):
        raw = reader.get(key, str)
        try:
            return enum_cls(raw)
        except ValueError:
            raise SnapshotFormatError(reader._where(key), f"unknown value {raw!r}") from None

    forks = tuple(
        ForkRecord(
            full_name=f.get("full_name", str),
            owner=f.get("owner", str),
            created_at=f.ts("created_at"),
            pushed_at=f.ts("pushed_at"),
            description=f.get("description", str, optional=True),
        )
        for f in root.items("forks")
    )
    pulls = tuple(
        PullRecord(
            number=p.get("number", int),
            author=p.get("author", str),
            head_repo_full_name=p.get("head_repo_full_name", str, optional=True),
            created_at=p.ts("created_at"),
            closed_at=p.ts("closed_at", optional=True),
            merged_at=p.ts("merged_at", optional=True),
        )
        for p in root.items("pulls")
    )
    issues = []
    for i in root.items("issues"):
        labels = i.get("labels", list)
        if not all(isinstance(label, str) for label in labels):
            raise SnapshotFormatError(i._where("labels"), "labels must be strings")
        issues.append(
            IssueRecord(
                number=i.get("number", int),
                created_at=i.ts("created_at"),
                closed_at=i.ts("closed_at", optional=True),
                labels=tuple(labels),
                priority=enum_field(i, "priority", Priority),
                kind=enum_field(i, "kind", IssueKind),
            )
        )
    return RepoSnapshot(
        repo=RepoRef(repo.get("owner", str), repo.get("name", str)),
        parent_pushed_at=meta.ts("parent_pushed_at"),
        fetched_at=meta.ts("fetched_at"),
        created_at=meta.ts("created_at"),
        flags=RepoFlags(
            archived=flags.get("archived", bool),
            is_template=flags.get("is_template", bool),
            is_fork=flags.get("is_fork", bool),
            has_issues=flags.get("has_issues", bool),
            has_downloads=flags.get("has_downloads", bool),
        ),
        stargazers=meta.get("stargazers", int),
        fork_count=meta.get("fork_count", int),
        forks=forks,
        pulls=pulls,
        issues=tuple(issues),
    )


def save_snapshot(snapshot: RepoSnapshot, path: str | os.PathLike) -> None:
    path = Path(path)
    text = dumps_snapshot(snapshot)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"could not write snapshot {path}: {exc}") from exc


def load_snapshot(path: str | os.PathLike) -> RepoSnapshot:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotFormatError("<document>", f"{path}: invalid JSON ({exc})") from None
    return snapshot_from_dict(data)


def snapshot_path(snapshot_dir: str | os.PathLike, repo: RepoRef) -> Path:
    return Path(snapshot_dir) / f"{repo.slug}.json"
