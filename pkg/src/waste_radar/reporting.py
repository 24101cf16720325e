"""Rendering of analysis bundles: text tables, CSV, JSON and static SVG charts."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .backlog_analysis import FFR_BINS, FLOW_KINDS
from .config import OUTPUT_FORMATS, ConfigError
from .fork_analysis import ForkClass
from .pipeline import RepoBundle, bundle_to_dict
from .snapshot import IssueKind, format_timestamp

log = logging.getLogger(__name__)

KIND_COLORS = {IssueKind.BUG: "#d62728", IssueKind.FEATURE: "#1f77b4"}


def fmt4(value: Fraction | float | int | None) -> str:
    """Four decimals truncated toward zero; exact zero prints as ``0``."""
    if value is None:
        return "n/a"
    # floats go through their shortest repr so 0.3 stays 0.3, not 0.2999...
    value = Fraction(repr(value)) if isinstance(value, float) else Fraction(value)
    if value == 0:
        return "0"
    sign = "-" if value < 0 else ""
    scaled = int(abs(value) * 10_000)  # int() truncates
    return f"{sign}{scaled // 10_000}.{scaled % 10_000:04d}"


@dataclass(frozen=True)
class WasteSummary:
    repo: str
    stale_plus_potentially_stale_pct: Fraction | None
    pdi: Fraction | None
    unmerged_merged_ratio: Fraction | None
    bi_index: Fraction

    @classmethod
    def from_bundle(cls, bundle: RepoBundle) -> "WasteSummary":
        return cls(
            repo=bundle.repo.full_name,
            stale_plus_potentially_stale_pct=bundle.forks.distribution.stale_and_potentially_stale,
            pdi=bundle.diversification.pdi,
            unmerged_merged_ratio=bundle.prr.ratio,
            bi_index=bundle.bi.bi_index,
        )

    def cells(self) -> tuple[str, str, str, str]:
        return (
            fmt4(self.stale_plus_potentially_stale_pct),
            fmt4(self.pdi),
            fmt4(self.unmerged_merged_ratio),
            fmt4(self.bi_index),
        )


def threshold_warnings(summary: WasteSummary, thresholds: dict[str, float]) -> list[str]:
    values = {
        "stale_pct": summary.stale_plus_potentially_stale_pct,
        "pdi": summary.pdi,
        "unmerged_merged_ratio": summary.unmerged_merged_ratio,
        "bi_index": summary.bi_index,
    }
    out = []
    for key, limit in sorted(thresholds.items()):
        value = values.get(key)
        if value is not None and value > Fraction(limit):
            out.append(f"{summary.repo}: {key} {fmt4(value)} exceeds threshold {limit}")
    return out


# -- text tables --------------------------------------------------------------


def text_table(headers: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    rows = [list(r) for r in rows]
    widths = [len(h) for h in headers]
    for row in rows:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]
    lines = [" | ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("-+-".join("-" * w for w in widths))
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append(" | ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


SUMMARY_HEADERS = (
    "Project",
    "Stale & Potentially Stale %",
    "Project Diversification Index",
    "Unmerged / Merged Ratio",
    "Backlog Inversion Index",
)


def summary_table(bundles: Sequence[RepoBundle]) -> str:
    return text_table(SUMMARY_HEADERS, [(b.repo.full_name, *WasteSummary.from_bundle(b).cells()) for b in bundles])


def fork_table(bundles: Sequence[RepoBundle]) -> str:
    order = (ForkClass.ACTIVE, ForkClass.BACKUP, ForkClass.POTENTIALLY_STALE, ForkClass.STALE)
    rows = []
    for b in bundles:
        dist = b.forks.distribution
        rows.append((b.repo.full_name, *(f"{dist.counts[c]:,}" for c in order), f"{dist.total:,}"))
        rows.append((f"% for {b.repo.full_name}", *(fmt4(dist.fraction(c)) for c in order), ""))
    return text_table(("Project", "Active", "Backup", "Potentially Stale", "Stale", "Total"), rows)


def pdi_table(bundles: Sequence[RepoBundle]) -> str:
    rows = [
        (b.repo.full_name, f"{b.diversification.contributing:,}", f"{b.diversification.independent:,}", fmt4(b.diversification.pdi))
        for b in bundles
    ]
    return text_table(("Project", "Contributing forks", "Independently developed forks", "PDI"), rows)


def prr_table(bundles: Sequence[RepoBundle]) -> str:
    rows = [(b.repo.full_name, f"{b.prr.merged:,}", f"{b.prr.unmerged:,}", fmt4(b.prr.ratio)) for b in bundles]
    return text_table(("Project", "Merged PRs", "Unmerged PRs", "Ratio"), rows)


def bi_table(bundles: Sequence[RepoBundle]) -> str:
    rows = [
        (b.repo.full_name, str(b.bi.high_low), str(b.bi.high_medium), str(b.bi.medium_low), fmt4(b.bi.bi_index))
        for b in bundles
    ]
    return text_table(("Project", "High-Low", "High-Medium", "Medium-Low", "BI Index"), rows)


def all_tables(bundles: Sequence[RepoBundle]) -> str:
    sections = [
        ("Fork Distribution", fork_table),
        ("Project Diversification Index", pdi_table),
        ("PR Rejection Rate", prr_table),
        ("Backlog Inversion", bi_table),
        ("Software Development Waste Measures", summary_table),
    ]
    return "\n".join(f"{title}\n\n{render(bundles)}" for title, render in sections)


# -- CSV ----------------------------------------------------------------------


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _opt(value: float | None) -> str:
    return "" if value is None else repr(value)


def csv_files(bundle: RepoBundle) -> dict[str, str]:
    gaps = bundle.forks.gaps
    prr, bi = bundle.prr, bundle.bi
    flow_rows = []
    for f in bundle.flow:
        for kind in FLOW_KINDS:
            k = f.flows[kind]
            flow_rows.append((f.sprint_index, format_timestamp(f.start), kind.value, k.inflow, k.spillover, k.outflow, _opt(k.ratio)))
    return {
        "forks.csv": _csv(
            ("full_name", "class", "gap_days"),
            ((n, bundle.forks.classes[n].value, f"{gaps[n]:.6f}") for n in sorted(bundle.forks.classes)),
        ),
        "prr.csv": _csv(("merged", "unmerged", "ratio"), [(prr.merged, prr.unmerged, fmt4(prr.ratio))]),
        "bi.csv": _csv(
            ("hl", "hm", "ml", "closed", "index"),
            [(bi.high_low, bi.high_medium, bi.medium_low, bi.total_closed_issues, fmt4(bi.bi_index))],
        ),
        "ffr_bins.csv": _csv(
            ("bin", "kind", "age_days", "normalized"),
            ((s.label, s.kind.value, age, repr(c)) for s in bundle.ffr for age, c in s.points),
        ),
        "flow.csv": _csv(("sprint_index", "window_start", "kind", "inflow", "spillover", "outflow", "ratio"), flow_rows),
    }


def summary_csv(bundles: Sequence[RepoBundle]) -> str:
    return _csv(
        ("repo", "stale_plus_potentially_stale_pct", "pdi", "unmerged_merged_ratio", "bi_index"),
        ((b.repo.full_name, *WasteSummary.from_bundle(b).cells()) for b in bundles),
    )


# -- SVG ----------------------------------------------------------------------

_W, _H = 640, 360
_LEFT, _RIGHT, _TOP, _BOTTOM = 56, 120, 36, 44


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_chart(
    title: str,
    x_label: str,
    y_label: str,
    series: Sequence[tuple[str, str, Sequence[Sequence[tuple[float, float]]]]],
    x_range: tuple[float, float],
    y_max: float | None = None,
    reference: float | None = None,
) -> str:
    """Static SVG line chart; each series is (name, colour, list of polyline segments)."""
    ys = [y for _, _, segs in series for seg in segs for _, y in seg]
    top = max([y_max or 0.0, *ys, reference or 0.0]) or 1.0
    x0, x1 = x_range
    span = (x1 - x0) or 1.0
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(x: float) -> str:
        return f"{_LEFT + (x - x0) / span * pw:.2f}"

    def py(y: float) -> str:
        return f"{_TOP + ph - y / top * ph:.2f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{_esc(title)}</text>',
        f'<line x1="{_LEFT}" y1="{_TOP + ph}" x2="{_LEFT + pw}" y2="{_TOP + ph}" stroke="black"/>',
        f'<line x1="{_LEFT}" y1="{_TOP}" x2="{_LEFT}" y2="{_TOP + ph}" stroke="black"/>',
    ]
    for i in range(5):
        y = top * i / 4
        out.append(f'<text x="{_LEFT - 6}" y="{py(y)}" text-anchor="end" font-family="sans-serif" font-size="10">{y:.2f}</text>')
        xv = x0 + span * i / 4
        out.append(f'<text x="{px(xv)}" y="{_TOP + ph + 14}" text-anchor="middle" font-family="sans-serif" font-size="10">{xv:g}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.0f}" y="{_H - 8}" text-anchor="middle" font-family="sans-serif" font-size="11">{_esc(x_label)}</text>')
    out.append(
        f'<text x="14" y="{_TOP + ph / 2:.0f}" text-anchor="middle" font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 14 {_TOP + ph / 2:.0f})">{_esc(y_label)}</text>'
    )
    if reference is not None:
        out.append(
            f'<line x1="{_LEFT}" y1="{py(reference)}" x2="{_LEFT + pw}" y2="{py(reference)}" stroke="#888" stroke-dasharray="4 3"/>'
        )
    for n, (name, color, segments) in enumerate(series):
        for seg in segments:
            if len(seg) == 1:
                x, y = seg[0]
                out.append(f'<circle cx="{px(x)}" cy="{py(y)}" r="2.5" fill="{color}"/>')
            elif seg:
                pts = " ".join(f"{px(x)},{py(y)}" for x, y in seg)
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _TOP + 12 + 18 * n
        out.append(f'<line x1="{_W - _RIGHT + 12}" y1="{ly}" x2="{_W - _RIGHT + 32}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _RIGHT + 38}" y="{ly + 4}" font-family="sans-serif" font-size="11">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def ffr_chart(bundle: RepoBundle, bin_: tuple[int, int]) -> str:
    series = []
    for kind in FLOW_KINDS:
        s = next((s for s in bundle.ffr if s.bin == bin_ and s.kind is kind), None)
        points = list(s.points) if s else []
        series.append((f"{kind.value} (n={s.total if s else 0})", KIND_COLORS[kind], [points] if points else []))
    return line_chart(
        f"{bundle.repo.full_name}: feature-bug balance, [{bin_[0]},{bin_[1]}) days",
        "days to close",
        "normalized count",
        series,
        (bin_[0], bin_[1] - 1),
    )


def flow_chart(bundle: RepoBundle) -> str:
    series = []
    for kind in FLOW_KINDS:
        segments, current = [], []
        for f in bundle.flow:
            ratio = f.flows[kind].ratio
            if ratio is None:
                if current:
                    segments.append(current)
                current = []
            else:
                current.append((f.sprint_index, ratio))
        if current:
            segments.append(current)
        series.append((kind.value, KIND_COLORS[kind], segments))
    last = bundle.flow[-1].sprint_index if bundle.flow else 0
    return line_chart(
        f"{bundle.repo.full_name}: inflow-outflow, sprints ending {format_timestamp(bundle.anchor)[:10]}",
        "sprint",
        "outflow / (inflow + spillover)",
        series,
        (0, last),
        reference=1.0,
    )


# -- orchestration ------------------------------------------------------------


def _write(path: Path, text: str, written: list[Path]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    written.append(path)


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def cmd_report(
    bundles: Sequence[RepoBundle],
    formats: Sequence[str],
    output_dir: str | Path,
    thresholds: dict[str, float] | None = None,
) -> list[Path]:
    """Render bundles into ``output_dir``; returns the written files in write order."""
    bad = [f for f in formats if f not in OUTPUT_FORMATS]
    if bad:
        raise ConfigError(f"unsupported output format(s): {', '.join(bad)}")
    out = Path(output_dir)
    written: list[Path] = []
    warnings = [w for b in bundles for w in threshold_warnings(WasteSummary.from_bundle(b), thresholds or {})]
    for w in warnings:
        log.warning(w)
    if "table" in formats:
        _write(out / "tables.txt", all_tables(bundles), written)
    if "csv" in formats:
        _write(out / "summary.csv", summary_csv(bundles), written)
        for b in bundles:
            for name, text in csv_files(b).items():
                _write(out / b.repo.slug / name, text, written)
    if "json" in formats:
        summary = {
            "repos": [
                dict(zip(("repo", "stale_plus_potentially_stale_pct", "pdi", "unmerged_merged_ratio", "bi_index"),
                         (b.repo.full_name, *WasteSummary.from_bundle(b).cells())))
                for b in bundles
            ],
            "warnings": warnings,
        }
        _write(out / "summary.json", dumps_json(summary), written)
        for b in bundles:
            _write(out / b.repo.slug / "bundle.json", dumps_json(bundle_to_dict(b)), written)
    if "svg" in formats:
        for b in bundles:
            for bin_ in FFR_BINS:
                _write(out / b.repo.slug / f"ffr_{bin_[0]}_{bin_[1]}.svg", ffr_chart(b, bin_), written)
            _write(out / b.repo.slug / "flow.svg", flow_chart(b), written)
    return written
