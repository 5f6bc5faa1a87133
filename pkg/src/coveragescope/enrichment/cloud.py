"""Yearly mean cloud cover at a point from an hourly weather archive."""
from __future__ import annotations

import calendar
import math
import warnings

import httpx

from ..errors import CoverageWarning, EmptySeries, HttpError

ARCHIVE_URL = "https://archive-api.open-meteo.com/v1/archive"
MIN_COMPLETENESS = 0.95


def cloud_cover_from_response(doc: dict, year: int) -> float:
    """Mean of the hourly ``cloud_cover`` percentages as a fraction; nulls are skipped."""
    try:
        values = doc["hourly"]["cloud_cover"]
    except (KeyError, TypeError):
        raise EmptySeries("response has no hourly.cloud_cover array") from None
    valid = [float(v) for v in values if v is not None and math.isfinite(float(v))]
    if not valid:
        raise EmptySeries(f"no cloud cover values for {year}")
    expected = (366 if calendar.isleap(year) else 365) * 24
    completeness = len(valid) / expected
    if completeness < MIN_COMPLETENESS:
        warnings.warn(f"cloud cover series {completeness:.1%} complete for {year}", CoverageWarning, stacklevel=2)
    return math.fsum(valid) / len(valid) / 100.0


def fetch_cloud_cover(lat: float, lon: float, year: int = 2023, client: httpx.Client | None = None,
                      endpoint: str = ARCHIVE_URL) -> float:
    params = {"latitude": f"{lat:.4f}", "longitude": f"{lon:.4f}", "start_date": f"{year}-01-01",
              "end_date": f"{year}-12-31", "hourly": "cloud_cover"}
    own = client is None
    client = client or httpx.Client(timeout=60.0)
    try:
        resp = client.get(endpoint, params=params)
    except httpx.TransportError as exc:
        raise HttpError(f"cloud archive unreachable: {exc}") from None
    finally:
        if own:
            client.close()
    if resp.status_code >= 300:
        raise HttpError(f"cloud archive returned {resp.status_code}", resp.status_code,
                        resp.headers.get("Retry-After"))
    return cloud_cover_from_response(resp.json(), year)
