"""STAC API search client: paging, retries, rate limiting and resumable harvests."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

import httpx

from ..errors import ConfigError, CursorInvalid, ExhaustedRetries, HttpError, SchemaError
from .models import format_rfc3339, item_to_record
from .store import SceneStore

log = logging.getLogger(__name__)

TRANSIENT_STATUS = frozenset({408, 425, 429, 500, 502, 503, 504})
_TOKEN_PARAMS = ("token", "next", "cursor", "page")


@dataclass(frozen=True)
class HarvestJob:
    endpoint: str
    collections: tuple[str, ...]
    bbox: tuple[float, float, float, float]
    time_range: tuple[datetime, datetime]
    page_cursor: str | None = None
    page_size: int = 200
    provider: str = ""
    method: str = "GET"
    token_env: str | None = None
    nominal_gsd: dict | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "collections", tuple(self.collections))
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        lon0, lat0, lon1, lat1 = self.bbox
        if not (-180 <= lon0 <= lon1 <= 180 and -90 <= lat0 <= lat1 <= 90):
            raise ValueError(f"bbox {self.bbox} is not well ordered")
        start, end = self.time_range
        if start.tzinfo is None or end.tzinfo is None:
            raise ValueError("time_range bounds must be timezone-aware")
        if not start < end:
            raise ValueError("time_range start must precede end")
        if self.page_size < 1:
            raise ValueError("page_size must be positive")
        if self.method.upper() not in ("GET", "POST"):
            raise ValueError("method must be GET or POST")
        object.__setattr__(self, "method", self.method.upper())
        if not self.provider:
            object.__setattr__(self, "provider", urlsplit(self.endpoint).hostname or "stac")

    def query(self) -> dict:
        """Search filters as sent on the wire, minus the cursor."""
        start, end = self.time_range
        q = {"bbox": list(self.bbox), "datetime": f"{format_rfc3339(start)}/{format_rfc3339(end)}",
             "limit": self.page_size}
        if self.collections:
            q["collections"] = list(self.collections)
        return q

    @property
    def fingerprint(self) -> str:
        doc = {"endpoint": self.endpoint, "provider": self.provider, "method": self.method, **self.query()}
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 5
    base: float = 1.0
    factor: float = 2.0
    max_delay: float = 120.0

    def delay(self, attempt: int, retry_after: float | None = None) -> float:
        """Wait before retry number ``attempt`` (1-based); Retry-After wins when longer."""
        d = min(self.base * self.factor ** (attempt - 1), self.max_delay)
        return max(d, retry_after or 0.0)


class RateLimiter:
    """Spaces requests at least ``1/rate`` seconds apart across threads."""

    def __init__(self, rate: float | None = 5.0, clock=time.monotonic, sleep=time.sleep):
        self.interval = 0.0 if not rate else 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)


@dataclass
class PageResult:
    records: list
    next_cursor: str | None
    errors: list[SchemaError]

    @property
    def done(self) -> bool:
        return self.next_cursor is None


@dataclass
class HarvestSummary:
    fingerprint: str
    provider: str
    pages: int = 0
    items_seen: int = 0
    records_added: int = 0
    errors: list[SchemaError] = field(default_factory=list)
    done: bool = False
    last_cursor: str | None = None
    resumed: bool = False


def _retry_after(resp: httpx.Response) -> float | None:
    value = resp.headers.get("Retry-After")
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        pass
    try:
        when = parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    return max(0.0, (when - datetime.now(timezone.utc)).total_seconds())


def _auth_headers(job: HarvestJob) -> dict:
    if not job.token_env:
        return {}
    token = os.environ.get(job.token_env)
    if not token:
        raise ConfigError(f"environment variable {job.token_env} is not set")
    return {"Authorization": f"Bearer {token}"}


def _send(client: httpx.Client, job: HarvestJob, cursor: str | None) -> httpx.Response:
    headers = _auth_headers(job)
    if cursor and cursor.startswith(("http://", "https://")):
        return client.get(cursor, headers=headers)
    q = job.query()
    if job.method == "POST":
        if cursor:
            q["token"] = cursor
        return client.post(job.endpoint, json=q, headers=headers)
    params = {"bbox": ",".join(repr(v) for v in q["bbox"]), "datetime": q["datetime"], "limit": q["limit"]}
    if "collections" in q:
        params["collections"] = ",".join(q["collections"])
    if cursor:
        params["token"] = cursor
    return client.get(job.endpoint, params=params, headers=headers)


def fetch(client, job, cursor, policy: RetryPolicy = RetryPolicy(), sleep=time.sleep,
          limiter: RateLimiter | None = None) -> dict:
    """One search request with bounded exponential backoff on transient failures."""
    last: Exception | None = None
    for attempt in range(1, policy.max_attempts + 1):
        if limiter is not None:
            limiter.wait()
        retry_after = None
        try:
            resp = _send(client, job, cursor)
        except httpx.TransportError as exc:
            last = HttpError(f"transport error: {exc}")
        else:
            if resp.status_code < 300:
                try:
                    return resp.json()
                except ValueError:
                    raise HttpError("response body is not JSON", resp.status_code) from None
            retry_after = _retry_after(resp)
            if resp.status_code not in TRANSIENT_STATUS:
                if cursor and resp.status_code in (400, 404, 410):
                    raise CursorInvalid(f"server rejected cursor {cursor!r} ({resp.status_code})")
                raise HttpError(f"{resp.status_code} from {job.endpoint}", resp.status_code, retry_after)
            last = HttpError(f"{resp.status_code} from {job.endpoint}", resp.status_code, retry_after)
        if attempt < policy.max_attempts:
            delay = policy.delay(attempt, retry_after)
            log.info("retrying %s in %.1fs (attempt %d): %s", job.endpoint, delay, attempt, last)
            sleep(delay)
    raise ExhaustedRetries(f"gave up on {job.endpoint} after {policy.max_attempts} attempts: {last}")


def next_cursor(page: dict) -> str | None:
    """Cursor for the following page, or None when the page is the last one."""
    for link in page.get("links") or []:
        if not isinstance(link, dict) or link.get("rel") != "next":
            continue
        body = link.get("body")
        if isinstance(body, dict):
            for key in _TOKEN_PARAMS:
                if body.get(key):
                    return str(body[key])
        href = link.get("href")
        if not href:
            raise CursorInvalid("next link carries neither a body token nor an href")
        query = parse_qs(urlsplit(href).query)
        for key in _TOKEN_PARAMS:
            if query.get(key):
                return query[key][0]
        return href
    return None


def parse_page(page: dict, job: HarvestJob) -> PageResult:
    """Convert a search response into records; bad items are collected, not raised."""
    features = page.get("features") if isinstance(page, dict) else None
    if not isinstance(features, list):
        raise SchemaError("search response has no features array")
    records, errors = [], []
    for item in features:
        try:
            records.append(item_to_record(item, job.provider, job.nominal_gsd))
        except SchemaError as exc:
            errors.append(exc)
    return PageResult(records, next_cursor(page), errors)


def search_page(job: HarvestJob, client: httpx.Client, cursor: str | None = None, *,
                policy: RetryPolicy = RetryPolicy(), sleep=time.sleep,
                limiter: RateLimiter | None = None) -> PageResult:
    """Fetch and parse one page, starting from ``cursor`` (or the job's own cursor)."""
    return parse_page(fetch(client, job, cursor or job.page_cursor, policy, sleep, limiter), job)


def harvest(job: HarvestJob, store: SceneStore, client: httpx.Client | None = None, *,
            policy: RetryPolicy = RetryPolicy(), rate_limit: float | None = 5.0, sleep=time.sleep,
            limiter: RateLimiter | None = None, max_pages: int | None = None) -> HarvestSummary:
    """Page through a search, appending new records and checkpointing the cursor after each page.

    An unfinished job recorded in the store manifest resumes from its saved
    cursor; a finished one starts over (and, thanks to deduplication, adds
    nothing new unless the catalog changed). ``max_pages`` stops early,
    leaving the job resumable.
    """
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=30.0, follow_redirects=True)
    limiter = limiter or RateLimiter(rate_limit, sleep=sleep)
    fp = job.fingerprint
    state = store.job_state(fp)
    summary = HarvestSummary(fp, job.provider)
    cursor = job.page_cursor
    if state and not state.get("done", False):
        cursor = state.get("last_cursor")
        summary.resumed = True
    total = int(state.get("record_count", 0)) if summary.resumed else 0
    query = {"endpoint": job.endpoint, "method": job.method, **job.query()}
    try:
        while max_pages is None or summary.pages < max_pages:
            page = search_page(job, client, cursor, policy=policy, sleep=sleep, limiter=limiter)
            added = store.append(page.records)
            total += added
            summary.pages += 1
            summary.items_seen += len(page.records) + len(page.errors)
            summary.records_added += added
            summary.errors.extend(page.errors)
            for err in page.errors:
                log.warning("skipped item %s: %s", err.item_id, err)
            store.commit(fp, query=query, provider=job.provider, last_cursor=page.next_cursor,
                         done=page.done, record_count=total)
            cursor = page.next_cursor
            if page.done:
                summary.done = True
                break
    finally:
        if own_client:
            client.close()
    summary.last_cursor = cursor
    return summary


def harvest_many(jobs, store: SceneStore, client: httpx.Client | None = None, *, workers: int = 4,
                 rate_limit: float | None = 5.0, policy: RetryPolicy = RetryPolicy(),
                 sleep=time.sleep) -> list[HarvestSummary]:
    """Run distinct jobs concurrently under one shared rate ceiling; results keep job order."""
    limiter = RateLimiter(rate_limit, sleep=sleep)
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=30.0, follow_redirects=True)
    try:
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            futures = [pool.submit(harvest, job, store, client, policy=policy, sleep=sleep, limiter=limiter)
                       for job in jobs]
            return [f.result() for f in futures]
    finally:
        if own_client:
            client.close()


def ingest_aggregate_counts(source, store: SceneStore, provider: str | None = None) -> int:
    """Load a (provider, period, bucket, count[, gsd_bin]) table for archives that only publish statistics.

    ``source`` is a CSV path or an iterable of mappings; ``provider``
    overrides or fills the provider column.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    else:
        rows = [dict(r) for r in source]
    for i, row in enumerate(rows):
        if provider:
            row["provider"] = provider
        missing = [k for k in ("provider", "period", "bucket", "count") if not str(row.get(k, "")).strip()]
        if missing:
            raise SchemaError(f"aggregate row {i} lacks {', '.join(missing)}")
        try:
            row["count"] = int(row["count"])
        except ValueError:
            raise SchemaError(f"aggregate row {i}: count {row['count']!r} is not an integer") from None
    added = store.append_aggregates(rows)
    store.commit()
    return added
