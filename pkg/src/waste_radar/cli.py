"""``waste-radar`` command line: fetch -> analyze -> report.

Exit codes: 0 success, 1 partial failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import date
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, parse_formats
from .github_ingest import AuthContext, FixtureTransport, GitHubClient, HttpTransport, IngestError, fetch_repo_snapshot
from .pipeline import MissingSnapshotError, analyze_snapshot, bundle_path, bundle_to_dict, load_repo_snapshot
from .reporting import cmd_report, dumps_json, summary_table
from .snapshot import RepoRef, SnapshotError, save_snapshot, snapshot_path

log = logging.getLogger("waste_radar")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="waste-radar", description="Software development waste measures from GitHub metadata.")
    parser.add_argument("command", choices=("fetch", "analyze", "report"))
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--repo", action="append", default=[], metavar="OWNER/NAME", help="repository (repeatable)")
    parser.add_argument("--snapshot-dir", type=Path)
    parser.add_argument("--out-dir", type=Path, help="where analyze/report write their files")
    parser.add_argument("--refresh", action="store_true", help="re-fetch snapshots that already exist")
    parser.add_argument("--fixture-dir", type=Path, help="replay recorded HTTP responses instead of calling GitHub")
    parser.add_argument("--format", dest="formats", help="comma list of table,csv,json,svg")
    parser.add_argument("--anchor-date", help="YYYY-MM-DD end of the sprint series")
    parser.add_argument("--fail-fast", action="store_true", help="fail instead of sleeping on rate limits")
    parser.add_argument("--workers", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.repo:
        try:
            changes["repos"] = [RepoRef.parse(r) for r in args.repo]
        except SnapshotError as exc:
            raise ConfigError(str(exc)) from exc
    if args.snapshot_dir:
        changes["snapshot_dir"] = args.snapshot_dir
    if args.out_dir:
        changes["output_dir"] = args.out_dir
    if args.formats:
        changes["output_formats"] = parse_formats(args.formats)
    if args.anchor_date:
        try:
            changes["anchor_date"] = date.fromisoformat(args.anchor_date)
        except ValueError as exc:
            raise ConfigError(f"--anchor-date: {exc}") from exc
    if args.workers is not None:
        changes["workers"] = args.workers
    return replace(config, **changes) if changes else config


def cmd_fetch(config: RunConfig, client: GitHubClient, refresh: bool = False) -> tuple[list[Path], list[str]]:
    """Write one snapshot per repo; returns (paths written or reused, failures)."""
    config.snapshot_dir.mkdir(parents=True, exist_ok=True)
    paths, failures = [], []
    for repo in config.repos:
        path = snapshot_path(config.snapshot_dir, repo)
        if path.exists() and not refresh:
            log.info("%s: snapshot present, skipping", repo)
            paths.append(path)
            continue
        try:
            snapshot = fetch_repo_snapshot(repo, limits=config.limits, client=client, mapping=config.label_mapping)
        except (IngestError, SnapshotError) as exc:
            log.error("%s: fetch failed: %s", repo, exc)
            failures.append(f"{repo}: {exc}")
            continue
        save_snapshot(snapshot, path)
        log.info("%s: wrote %s", repo, path)
        paths.append(path)
    return paths, failures


def _analyze_all(config: RunConfig):
    def one(repo: RepoRef):
        try:
            return analyze_snapshot(load_repo_snapshot(config, repo), config), None
        except (MissingSnapshotError, SnapshotError) as exc:
            log.error("%s: %s", repo, exc)
            return None, f"{repo}: {exc}"

    with ThreadPoolExecutor(config.workers) as pool:
        results = list(pool.map(one, config.repos))
    return [b for b, _ in results if b is not None], [f for _, f in results if f is not None]


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
    except (ConfigError, SnapshotError) as exc:
        print(f"waste-radar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "fetch":
        if not config.repos:
            print("waste-radar: no repositories configured (use --repo or --config)", file=sys.stderr)
            return EXIT_USAGE
        if args.fixture_dir:
            transport = FixtureTransport(args.fixture_dir)
        else:
            transport = HttpTransport(AuthContext.from_env(config.api_base_url))
        client = GitHubClient(transport, fail_fast=args.fail_fast, workers=config.workers)
        _, failures = cmd_fetch(config, client, refresh=args.refresh)
        return EXIT_PARTIAL if failures else EXIT_OK

    bundles, failures = _analyze_all(config)
    if args.command == "analyze":
        directory = config.output_dir / "bundles"
        directory.mkdir(parents=True, exist_ok=True)
        for bundle in bundles:
            bundle_path(directory, bundle.repo).write_text(dumps_json(bundle_to_dict(bundle)), encoding="utf-8")
        sys.stdout.write(summary_table(bundles))
    else:
        for path in cmd_report(bundles, config.output_formats, config.output_dir, config.thresholds):
            log.info("wrote %s", path)
        if "table" in config.output_formats:
            sys.stdout.write(summary_table(bundles))
    return EXIT_PARTIAL if failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
