"""Run configuration, loaded from a JSON document and overridden by CLI flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any

from .github_ingest import DEFAULT_API, FetchLimits
from .snapshot import DEFAULT_LABEL_MAPPING, LabelMapping, RepoRef

OUTPUT_FORMATS = ("table", "csv", "json", "svg")
THRESHOLD_KEYS = ("stale_pct", "pdi", "unmerged_merged_ratio", "bi_index")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    repos: list[RepoRef] = field(default_factory=list)
    snapshot_dir: Path = Path("snapshots")
    output_dir: Path = Path("reports")
    label_mapping: LabelMapping = DEFAULT_LABEL_MAPPING
    anchor_date: date | None = None
    sprint_days: int = 14
    sprint_count: int = 60
    active_window_days: int = 90
    output_formats: tuple[str, ...] = ("table",)
    workers: int = 4
    limits: FetchLimits = FetchLimits()
    # optional per-measure warning levels; none ship by default
    thresholds: dict[str, float] = field(default_factory=dict)
    compare_zhou: bool = False
    api_base_url: str = DEFAULT_API

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.sprint_days < 1 or self.sprint_count < 1 or self.active_window_days < 1:
            raise ConfigError("sprint_days, sprint_count and active_window_days must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        bad = [f for f in self.output_formats if f not in OUTPUT_FORMATS]
        if bad:
            raise ConfigError(f"unsupported output format(s): {', '.join(bad)}")
        unknown = set(self.thresholds) - set(THRESHOLD_KEYS)
        if unknown:
            raise ConfigError(f"unknown threshold(s): {', '.join(sorted(unknown))}")


def parse_formats(text: str) -> tuple[str, ...]:
    formats = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [f for f in formats if f not in OUTPUT_FORMATS]
    if bad or not formats:
        raise ConfigError(f"unsupported output format(s): {', '.join(bad) or '<empty>'}")
    return formats


def config_from_dict(data: dict[str, Any], base_dir: Path | None = None) -> RunConfig:
    base_dir = base_dir or Path(".")
    known = {
        "repos", "snapshot_dir", "output_dir", "label_mapping", "anchor_date", "sprint_days",
        "sprint_count", "active_window_days", "output_formats", "workers", "limits",
        "thresholds", "compare_zhou", "api_base_url",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    try:
        kwargs: dict[str, Any] = {}
        if "repos" in data:
            kwargs["repos"] = [RepoRef.parse(r) if isinstance(r, str) else RepoRef(r["owner"], r["name"]) for r in data["repos"]]
        for key in ("snapshot_dir", "output_dir"):
            if key in data:
                kwargs[key] = base_dir / data[key]
        if "label_mapping" in data:
            kwargs["label_mapping"] = LabelMapping.from_dict(data["label_mapping"])
        if data.get("anchor_date"):
            kwargs["anchor_date"] = date.fromisoformat(data["anchor_date"])
        for key in ("sprint_days", "sprint_count", "active_window_days", "workers"):
            if key in data:
                kwargs[key] = int(data[key])
        if "output_formats" in data:
            formats = data["output_formats"]
            kwargs["output_formats"] = parse_formats(formats if isinstance(formats, str) else ",".join(formats))
        if "limits" in data:
            kwargs["limits"] = FetchLimits(**data["limits"])
        if "thresholds" in data:
            kwargs["thresholds"] = {k: float(v) for k, v in data["thresholds"].items()}
        if "compare_zhou" in data:
            kwargs["compare_zhou"] = bool(data["compare_zhou"])
        if "api_base_url" in data:
            kwargs["api_base_url"] = str(data["api_base_url"])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    return RunConfig(**kwargs)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return config_from_dict(data, path.parent)
