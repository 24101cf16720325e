"""GitHub REST ingestion into RepoSnapshot values.

Requests go through a small transport interface so the same code path runs
against the live API or against recorded responses on disk.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable, NamedTuple
from urllib.parse import parse_qs, urlencode, urlparse

import requests

from .snapshot import (
    DEFAULT_LABEL_MAPPING,
    ForkRecord,
    IssueRecord,
    LabelMapping,
    PullRecord,
    RepoFlags,
    RepoRef,
    RepoSnapshot,
    SnapshotValidationError,
    classify_issue,
    parse_timestamp,
)

log = logging.getLogger(__name__)

DEFAULT_API = "https://api.github.com"
TOKEN_ENV = "WASTE_RADAR_TOKEN"
PER_PAGE = 100


class IngestError(Exception):
    pass


class UnknownRepoError(IngestError):
    pass


class RateLimitError(IngestError):
    pass


class TransportError(IngestError):
    pass


class GitHubApiError(IngestError):
    pass


@dataclass(frozen=True)
class AuthContext:
    token: str | None = field(default=None, repr=False)
    api_base_url: str = DEFAULT_API

    def __post_init__(self):
        parsed = urlparse(self.api_base_url)
        if not (parsed.scheme and parsed.netloc):
            raise ValueError(f"api_base_url must be absolute, got {self.api_base_url!r}")

    @classmethod
    def from_env(cls, api_base_url: str = DEFAULT_API) -> "AuthContext":
        return cls(os.environ.get(TOKEN_ENV) or None, api_base_url)


@dataclass(frozen=True)
class FetchLimits:
    max_forks: int | None = None
    max_pulls: int | None = None
    max_issues: int | None = None


class Response(NamedTuple):
    status: int
    headers: dict[str, str]
    body: Any


# -- transports ---------------------------------------------------------------


def fixture_name(path: str, params: dict | None = None) -> str:
    """File name under which a recorded response for (path, params) is stored."""
    stem = path.strip("/").replace("/", "__")
    if params:
        stem += "@" + urlencode(sorted((k, str(v)) for k, v in params.items()))
    return stem + ".json"


class FixtureTransport:
    """Replays recorded responses from a directory; never touches the network."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        self.calls: list[str] = []
        self._lock = threading.Lock()

    def get(self, path: str, params: dict | None = None) -> Response:
        name = fixture_name(path, params)
        with self._lock:
            self.calls.append(name)
        file = self.directory / name
        if not file.exists():
            raise TransportError(f"no recorded response {file}")
        data = json.loads(file.read_text(encoding="utf-8"))
        headers = {k.lower(): str(v) for k, v in data.get("headers", {}).items()}
        return Response(int(data["status"]), headers, data.get("body"))


def write_fixture(directory: str | os.PathLike, path: str, params: dict | None, response: Response) -> Path:
    file = Path(directory) / fixture_name(path, params)
    payload = {"status": response.status, "headers": response.headers, "body": response.body}
    file.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return file


class HttpTransport:
    """requests-based transport with retry on 5xx and connection failures."""

    def __init__(
        self,
        auth: AuthContext,
        attempts: int = 3,
        backoff: float = 1.0,
        timeout: float = 30.0,
        record_dir: str | os.PathLike | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.auth = auth
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout
        self.record_dir = record_dir
        self.sleep = sleep
        self.session = requests.Session()
        self.session.headers["Accept"] = "application/vnd.github+json"
        self.session.headers["X-GitHub-Api-Version"] = "2022-11-28"
        if auth.token:
            self.session.headers["Authorization"] = f"Bearer {auth.token}"

    def get(self, path: str, params: dict | None = None) -> Response:
        url = self.auth.api_base_url.rstrip("/") + path
        last_error: Exception | None = None
        for attempt in range(self.attempts):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                raw = self.session.get(url, params=params, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                log.warning("GET %s failed (%s), attempt %d/%d", url, exc, attempt + 1, self.attempts)
                continue
            if raw.status_code >= 500:
                last_error = GitHubApiError(f"HTTP {raw.status_code} for {url}")
                log.warning("GET %s returned %d, attempt %d/%d", url, raw.status_code, attempt + 1, self.attempts)
                continue
            try:
                body = raw.json()
            except ValueError:
                body = raw.text
            response = Response(raw.status_code, {k.lower(): v for k, v in raw.headers.items()}, body)
            if self.record_dir is not None:
                write_fixture(self.record_dir, path, params, response)
            return response
        raise TransportError(f"GET {url} failed after {self.attempts} attempts: {last_error}")


# -- client -------------------------------------------------------------------


_LINK_RE = re.compile(r'<([^>]+)>;\s*rel="(\w+)"')


def parse_link_header(value: str | None) -> dict[str, int]:
    """Map rel -> page number from a GitHub Link header."""
    pages = {}
    for url, rel in _LINK_RE.findall(value or ""):
        page = parse_qs(urlparse(url).query).get("page")
        if page:
            pages[rel] = int(page[0])
    return pages


class GitHubClient:
    """Request helper sharing one rate-limit budget across worker threads."""

    def __init__(
        self,
        transport,
        fail_fast: bool = False,
        workers: int = 4,
        sleep: Callable[[float], None] = time.sleep,
        now: Callable[[], float] = time.time,
    ):
        self.transport = transport
        self.fail_fast = fail_fast
        self.workers = max(1, workers)
        self.sleep = sleep
        self.now = now
        self._lock = threading.Lock()
        self._blocked_until = 0.0

    def _wait_for_budget(self) -> None:
        with self._lock:
            wait = self._blocked_until - self.now()
        if wait > 0:
            log.info("rate limit exhausted, sleeping %.0f s until reset", wait)
            self.sleep(wait)

    def _note_budget(self, headers: dict[str, str]) -> None:
        if headers.get("x-ratelimit-remaining") == "0" and "x-ratelimit-reset" in headers:
            with self._lock:
                self._blocked_until = max(self._blocked_until, float(headers["x-ratelimit-reset"]) + 1)

    def get(self, path: str, params: dict | None = None) -> Response:
        while True:
            if not self.fail_fast:
                self._wait_for_budget()
            response = self.transport.get(path, params)
            self._note_budget(response.headers)
            limited = response.status in (403, 429) and (
                response.headers.get("x-ratelimit-remaining") == "0" or "retry-after" in response.headers
            )
            if limited:
                if self.fail_fast:
                    raise RateLimitError(f"rate limit hit on {path}")
                with self._lock:
                    if "retry-after" in response.headers:
                        self._blocked_until = self.now() + float(response.headers["retry-after"])
                    elif "x-ratelimit-reset" not in response.headers:
                        self._blocked_until = self.now() + 60
                continue
            if response.status == 404:
                raise UnknownRepoError(f"not found: {path}")
            if response.status >= 400:
                raise GitHubApiError(f"HTTP {response.status} for {path}: {response.body}")
            return response

    def paginate(
        self,
        path: str,
        params: dict | None = None,
        limit: int | None = None,
        keep: Callable[[dict], bool] | None = None,
    ) -> list[dict]:
        """Collect list items across pages.

        Without a limit and with a ``last`` link on page one, the remaining pages
        are fetched concurrently. Otherwise pages are walked in order until a
        short page, no ``next`` link, or ``limit`` kept items.
        """
        params = dict(params or {})
        params["per_page"] = PER_PAGE

        def page(n: int) -> Response:
            response = self.get(path, {**params, "page": n})
            if not isinstance(response.body, list):
                raise GitHubApiError(f"expected a list from {path}, got {type(response.body).__name__}")
            return response

        first = page(1)
        links = parse_link_header(first.headers.get("link"))
        bodies = [first.body]
        if limit is None and "last" in links:
            with ThreadPoolExecutor(self.workers) as pool:
                bodies.extend(r.body for r in pool.map(page, range(2, links["last"] + 1)))
        else:
            n, current = 1, first
            while True:
                kept = sum(1 for body in bodies for item in body if keep is None or keep(item))
                if limit is not None and kept >= limit:
                    break
                more = parse_link_header(current.headers.get("link"))
                if "next" not in more and (more or len(current.body) < PER_PAGE):
                    break
                n += 1
                current = page(n)
                if not current.body:
                    break
                bodies.append(current.body)
        items = [item for body in bodies for item in body if keep is None or keep(item)]
        return items


# -- record conversion --------------------------------------------------------


def _ts(value: Any) -> datetime | None:
    return parse_timestamp(value) if value else None


def _dedupe(items: Iterable[dict], key: Callable[[dict], Any], what: str) -> list[dict]:
    seen = set()
    out = []
    duplicates = 0
    for item in items:
        k = key(item)
        if k in seen:
            duplicates += 1
            continue
        seen.add(k)
        out.append(item)
    if duplicates:
        log.info("dropped %d duplicate %s records across pages", duplicates, what)
    return out


def fork_from_api(item: dict) -> ForkRecord | None:
    created, pushed = _ts(item.get("created_at")), _ts(item.get("pushed_at"))
    if created is None or pushed is None:
        log.warning("skipping fork %s: missing created_at/pushed_at", item.get("full_name"))
        return None
    return ForkRecord(
        full_name=item["full_name"],
        owner=(item.get("owner") or {}).get("login") or item["full_name"].split("/")[0],
        created_at=created,
        pushed_at=pushed,
        description=item.get("description"),
    )


def pull_from_api(item: dict) -> PullRecord:
    head_repo = (item.get("head") or {}).get("repo")
    return PullRecord(
        number=item["number"],
        author=(item.get("user") or {}).get("login") or "",
        head_repo_full_name=head_repo.get("full_name") if head_repo else None,
        created_at=_ts(item["created_at"]),
        closed_at=_ts(item.get("closed_at")),
        merged_at=_ts(item.get("merged_at")),
    )


def issue_from_api(item: dict, mapping: LabelMapping = DEFAULT_LABEL_MAPPING) -> IssueRecord:
    labels = tuple(label["name"] if isinstance(label, dict) else str(label) for label in item.get("labels") or ())
    priority, kind = classify_issue(labels, mapping)
    return IssueRecord(
        number=item["number"],
        created_at=_ts(item["created_at"]),
        closed_at=_ts(item.get("closed_at")),
        labels=labels,
        priority=priority,
        kind=kind,
    )


def is_pull_request(item: dict) -> bool:
    return "pull_request" in item


def fetch_repo_snapshot(
    repo: RepoRef,
    auth: AuthContext | None = None,
    limits: FetchLimits = FetchLimits(),
    *,
    client: GitHubClient | None = None,
    mapping: LabelMapping = DEFAULT_LABEL_MAPPING,
    clock: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
) -> RepoSnapshot:
    if client is None:
        client = GitHubClient(HttpTransport(auth or AuthContext.from_env()))
    base = f"/repos/{repo.owner}/{repo.name}"
    meta = client.get(base).body

    raw_forks = client.paginate(f"{base}/forks", {"sort": "oldest"}, limits.max_forks)
    forks = [f for f in map(fork_from_api, _dedupe(raw_forks, lambda i: i["full_name"], "fork")) if f]
    if limits.max_forks is not None:
        forks = forks[: limits.max_forks]

    raw_pulls = client.paginate(
        f"{base}/pulls", {"state": "closed", "sort": "created", "direction": "desc"}, limits.max_pulls
    )
    pulls = [pull_from_api(p) for p in _dedupe(raw_pulls, lambda i: i["number"], "pull")]
    pulls = [p for p in pulls if p.is_closed]
    pulls.sort(key=lambda p: (p.created_at, p.number), reverse=True)
    if limits.max_pulls is not None:
        pulls = pulls[: limits.max_pulls]

    raw_issues = client.paginate(
        f"{base}/issues",
        {"state": "all", "sort": "created", "direction": "desc"},
        limits.max_issues,
        keep=lambda item: not is_pull_request(item),
    )
    issues = [issue_from_api(i, mapping) for i in _dedupe(raw_issues, lambda i: i["number"], "issue")]
    issues.sort(key=lambda i: (i.created_at, i.number), reverse=True)
    if limits.max_issues is not None:
        issues = issues[: limits.max_issues]

    try:
        return RepoSnapshot(
            repo=repo,
            parent_pushed_at=parse_timestamp(meta["pushed_at"]),
            fetched_at=clock(),
            created_at=parse_timestamp(meta["created_at"]),
            flags=RepoFlags(
                archived=bool(meta.get("archived", False)),
                is_template=bool(meta.get("is_template", False)),
                is_fork=bool(meta.get("fork", False)),
                has_issues=bool(meta.get("has_issues", True)),
                has_downloads=bool(meta.get("has_downloads", True)),
            ),
            stargazers=int(meta.get("stargazers_count", 0)),
            fork_count=int(meta.get("forks_count", 0)),
            forks=tuple(forks),
            pulls=tuple(pulls),
            issues=tuple(issues),
        )
    except (KeyError, TypeError) as exc:
        raise GitHubApiError(f"unexpected repository payload for {repo}: {exc}") from exc


# -- selection ----------------------------------------------------------------


@dataclass(frozen=True)
class SelectionCriteria:
    """Inclusion/exclusion predicates applied to candidate repository metadata.

    ``min_stars`` and ``min_forks`` are inclusive lower bounds. Owner allow/deny
    lists shape the population by hand and are applied on top.
    """

    min_stars: int = 0
    require_pushed_in_year: int | None = None
    require_has_issues: bool = False
    require_has_downloads: bool = False
    min_forks: int = 1
    created_before: datetime | None = None
    exclude_archived: bool = False
    exclude_template: bool = False
    exclude_fork: bool = False
    allow_owners: tuple[str, ...] = ()
    deny_owners: tuple[str, ...] = ()

    def __post_init__(self):
        if self.min_stars < 0:
            raise ValueError("min_stars must be non-negative")
        if self.min_forks < 1:
            raise ValueError("min_forks must be positive")

    @classmethod
    def study_preset(cls) -> "SelectionCriteria":
        """Over 50k stars, pushed in 2024, has issues and downloads, forked, created before 2024."""
        return cls(
            min_stars=50_001,
            require_pushed_in_year=2024,
            require_has_issues=True,
            require_has_downloads=True,
            min_forks=1,
            created_before=datetime(2024, 1, 1, tzinfo=timezone.utc),
            exclude_archived=True,
            exclude_template=True,
            exclude_fork=True,
        )


def _candidate_ref(candidate: dict) -> RepoRef:
    if "full_name" in candidate:
        return RepoRef.parse(candidate["full_name"])
    return RepoRef((candidate.get("owner") or {})["login"], candidate["name"])


def _passes(candidate: dict, c: SelectionCriteria) -> bool:
    if c.min_stars and candidate["stargazers_count"] < c.min_stars:
        return False
    if c.require_pushed_in_year is not None and parse_timestamp(candidate["pushed_at"]).year != c.require_pushed_in_year:
        return False
    if c.require_has_issues and not candidate["has_issues"]:
        return False
    if c.require_has_downloads and not candidate["has_downloads"]:
        return False
    if candidate["forks_count"] < c.min_forks:
        return False
    if c.created_before is not None and parse_timestamp(candidate["created_at"]) >= c.created_before:
        return False
    if c.exclude_archived and candidate["archived"]:
        return False
    if c.exclude_template and candidate["is_template"]:
        return False
    if c.exclude_fork and candidate["fork"]:
        return False
    return True


def select_repositories(candidates: Iterable[dict], criteria: SelectionCriteria) -> list[RepoRef]:
    chosen = []
    allow = {o.lower() for o in criteria.allow_owners}
    deny = {o.lower() for o in criteria.deny_owners}
    for candidate in candidates:
        try:
            ref = _candidate_ref(candidate)
            if (allow and ref.owner.lower() not in allow) or ref.owner.lower() in deny:
                continue
            if _passes(candidate, criteria):
                chosen.append((candidate.get("stargazers_count", 0), ref))
        except (KeyError, TypeError, ValueError, SnapshotValidationError) as exc:
            log.warning("excluding candidate %s: missing or invalid field %s", candidate.get("full_name", "?"), exc)
    chosen.sort(key=lambda pair: (-pair[0], pair[1].full_name))
    return [ref for _, ref in chosen]
