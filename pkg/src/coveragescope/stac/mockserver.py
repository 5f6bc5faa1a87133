"""A tiny STAC search server replaying canned pages from a directory.

Each page lives in ``<dir>/<cursor>.json`` as ``{"features": [...], "next": <cursor|null>}``;
the first page is ``start.json``. An optional ``failures.json`` maps a cursor to the
number of 503 responses (with ``Retry-After: 0``) to serve before the real page.
"""
from __future__ import annotations

import json
import re
import threading
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

START = "start"
_CURSOR = re.compile(r"^[A-Za-z0-9_-]+$")


def create_mock_app(pages_dir: str | Path, failures: dict[str, int] | None = None) -> FastAPI:
    pages_dir = Path(pages_dir)
    if failures is None and (pages_dir / "failures.json").exists():
        failures = json.loads((pages_dir / "failures.json").read_text())
    remaining = dict(failures or {})
    lock = threading.Lock()
    app = FastAPI(title="mock STAC")
    app.state.requests = []

    def serve(request: Request, cursor: str | None, post: bool):
        cursor = cursor or START
        app.state.requests.append((request.method, cursor))
        path = pages_dir / f"{cursor}.json"
        if not _CURSOR.match(cursor) or not path.exists():
            return JSONResponse({"code": "InvalidCursor", "description": f"unknown token {cursor}"}, 400)
        with lock:
            if remaining.get(cursor, 0) > 0:
                remaining[cursor] -= 1
                return JSONResponse({"code": "Unavailable"}, 503, headers={"Retry-After": "0"})
        page = json.loads(path.read_text(encoding="utf-8"))
        links = [{"rel": "self", "href": str(request.url)}]
        nxt = page.get("next")
        if nxt:
            base = str(request.url_for("search_get"))
            if post:
                links.append({"rel": "next", "href": base, "method": "POST", "body": {"token": nxt}, "merge": True})
            else:
                links.append({"rel": "next", "href": f"{base}?token={nxt}", "method": "GET"})
        return {"type": "FeatureCollection", "features": page["features"], "links": links,
                "numberReturned": len(page["features"])}

    @app.get("/")
    def landing():
        return {"type": "Catalog", "id": "mock", "stac_version": "1.0.0", "description": "canned pages",
                "conformsTo": ["https://api.stacspec.org/v1.0.0/item-search"], "links": []}

    @app.get("/search", name="search_get")
    def search_get(request: Request, token: str | None = None):
        return serve(request, token, post=False)

    @app.post("/search")
    async def search_post(request: Request):
        try:
            body = await request.json()
        except ValueError:
            body = {}
        return serve(request, (body or {}).get("token"), post=True)

    return app


def _square(lon, lat, half):
    return {"type": "Polygon", "coordinates": [[
        [lon - half, lat - half], [lon + half, lat - half], [lon + half, lat + half],
        [lon - half, lat + half], [lon - half, lat - half]]]}


def fixture_items(n: int, seed: int = 0, prefix: str = "scene", malformed: int = 0) -> list[dict]:
    """Deterministic STAC items scattered over land-ish latitudes, 2017 to 2023."""
    rng = np.random.default_rng(seed)
    t0 = datetime(2017, 1, 1, tzinfo=timezone.utc)
    span = (datetime(2024, 1, 1, tzinfo=timezone.utc) - t0).total_seconds()
    consts = [("WorldView-3", 0.31), ("SkySat", 0.5), ("Pleiades", 0.7), ("Gaofen-2", 0.8), ("PlanetScope", 3.9)]
    bad = set(rng.choice(n, size=min(malformed, n), replace=False).tolist()) if malformed else set()
    items = []
    for i in range(n):
        lon = float(np.round(rng.uniform(-179.0, 179.0), 5))
        lat = float(np.round(rng.uniform(-60.0, 75.0), 5))
        when = t0 + timedelta(seconds=int(rng.uniform(0, span)))
        name, gsd = consts[int(rng.integers(len(consts)))]
        props = {"datetime": when.strftime("%Y-%m-%dT%H:%M:%SZ"), "constellation": name,
                 "eo:cloud_cover": float(np.round(rng.uniform(0, 100), 1))}
        mode = int(rng.integers(4))
        if i in bad:
            pass
        elif mode == 0:
            props["eo:gsd"] = gsd
        else:
            props["gsd"] = gsd
        items.append({"type": "Feature", "stac_version": "1.0.0", "id": f"{prefix}-{i:06d}",
                      "geometry": _square(lon, lat, 0.05), "bbox": [lon - 0.05, lat - 0.05, lon + 0.05, lat + 0.05],
                      "properties": props, "links": [], "assets": {}})
    return items


def write_fixture_pages(directory: str | Path, n_pages: int = 5, per_page: int = 200, seed: int = 0,
                        prefix: str = "scene", malformed: int = 0) -> Path:
    """Write ``n_pages`` canned pages; cursors are ``start``, ``p2``, ``p3``, ..."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    items = fixture_items(n_pages * per_page, seed, prefix, malformed)
    names = [START] + [f"p{k}" for k in range(2, n_pages + 1)]
    for k, name in enumerate(names):
        doc = {"features": items[k * per_page:(k + 1) * per_page],
               "next": names[k + 1] if k + 1 < len(names) else None}
        (directory / f"{name}.json").write_text(json.dumps(doc, indent=1), encoding="utf-8")
    return directory
