"""Append-only, partitioned NDJSON scene store with an atomically replaced manifest.

Layout under the store root::

    scenes/<provider>/<year>.ndjson   one SceneRecord per line, fixed key order
    aggregates/<provider>.ndjson      pre-aggregated (provider, period, bucket, count) rows
    manifest.json                     counts, partitions and per-job harvest cursors
"""
from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..errors import StoreError
from .models import SceneRecord

MANIFEST = "manifest.json"
FORMAT = "coveragescope-store/1"
_FOOTPRINT_MARK = ',"footprint":'


def _slug(text: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("._")
    return slug or "_"


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _repair(path: Path) -> None:
    """Drop a torn trailing line left by an interrupted write."""
    with open(path, "rb+") as fh:
        fh.seek(0, os.SEEK_END)
        size = fh.tell()
        if size == 0:
            return
        fh.seek(size - 1)
        if fh.read(1) == b"\n":
            return
        fh.seek(0)
        data = fh.read()
        cut = data.rfind(b"\n") + 1
        fh.truncate(cut)


def light_fields(line: str) -> tuple:
    """Parse only the leading scalar fields of a stored line (footprint and properties skipped)."""
    cut = line.find(_FOOTPRINT_MARK)
    d = json.loads(line[:cut] + "}" if cut >= 0 else line)
    return (d["provider"], d["scene_id"], d["constellation"], d["acquired_at"],
            d["gsd_m"], d["centroid_lon"], d["centroid_lat"])


class SceneStore:
    """Single-writer-per-partition NDJSON store. Thread-safe for appends within one process."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        try:
            (self.root / "scenes").mkdir(parents=True, exist_ok=True)
            (self.root / "aggregates").mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreError(f"cannot create store at {self.root}: {exc}") from exc
        self._lock = threading.Lock()
        self._keys: set[tuple[str, str]] | None = None
        self._agg_keys: set[tuple[str, str, str]] | None = None
        for path in self.partitions():
            _repair(path)
        for path in sorted((self.root / "aggregates").glob("*.ndjson")):
            _repair(path)
        self.manifest = self._load_manifest()
        self._sync_counts()

    # -- manifest ------------------------------------------------------------

    def _load_manifest(self) -> dict:
        path = self.root / MANIFEST
        if path.exists():
            try:
                doc = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise StoreError(f"corrupt manifest {path}: {exc}") from exc
            if doc.get("format") != FORMAT:
                raise StoreError(f"unsupported store format {doc.get('format')!r}")
            return doc
        return {"format": FORMAT, "record_count": 0, "partitions": {}, "aggregate_count": 0,
                "jobs": {}, "last_updated": None}

    def _sync_counts(self) -> None:
        parts = {}
        for path in self.partitions():
            with open(path, "rb") as fh:
                parts[path.relative_to(self.root).as_posix()] = sum(1 for _ in fh)
        self.manifest["partitions"] = parts
        self.manifest["record_count"] = sum(parts.values())
        agg = 0
        for path in (self.root / "aggregates").glob("*.ndjson"):
            with open(path, "rb") as fh:
                agg += sum(1 for _ in fh)
        self.manifest["aggregate_count"] = agg

    def commit(self, job_fingerprint: str | None = None, **job_state) -> None:
        """Atomically persist the manifest, optionally updating one job's state."""
        with self._lock:
            self._commit_locked(job_fingerprint, job_state)

    def _commit_locked(self, fingerprint, job_state):
        if fingerprint is not None:
            entry = self.manifest["jobs"].setdefault(fingerprint, {})
            entry.update(job_state)
            entry["last_updated"] = _now()
        self.manifest["last_updated"] = _now()
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".manifest-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.manifest, fh, indent=2, sort_keys=True)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.root / MANIFEST)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def job_state(self, fingerprint: str) -> dict:
        return dict(self.manifest["jobs"].get(fingerprint, {}))

    # -- scenes --------------------------------------------------------------

    def partitions(self) -> list[Path]:
        return sorted((self.root / "scenes").glob("*/*.ndjson"))

    def partition_path(self, provider: str, year: int) -> Path:
        return self.root / "scenes" / _slug(provider) / f"{year:04d}.ndjson"

    def _ensure_keys(self):
        if self._keys is None:
            keys = set()
            for line in self._lines():
                f = light_fields(line)
                keys.add((f[0], f[1]))
            self._keys = keys
        return self._keys

    def __contains__(self, key) -> bool:
        return tuple(key) in self._ensure_keys()

    def __len__(self) -> int:
        return int(self.manifest["record_count"])

    def append(self, records) -> int:
        """Append records not already present; returns the number added. Caller commits."""
        with self._lock:
            keys = self._ensure_keys()
            grouped: dict[Path, list[str]] = {}
            for rec in records:
                if rec.key in keys:
                    continue
                keys.add(rec.key)
                grouped.setdefault(self.partition_path(rec.provider, rec.acquired_at.year), []).append(rec.to_json())
            added = 0
            for path, lines in grouped.items():
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write("".join(line + "\n" for line in lines))
                    fh.flush()
                    os.fsync(fh.fileno())
                rel = path.relative_to(self.root).as_posix()
                self.manifest["partitions"][rel] = self.manifest["partitions"].get(rel, 0) + len(lines)
                added += len(lines)
            self.manifest["record_count"] += added
            return added

    def _lines(self, years=None, providers=None):
        for path in self.partitions():
            if years is not None and int(path.stem) not in years:
                continue
            if providers is not None and path.parent.name not in {_slug(p) for p in providers}:
                continue
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.endswith("\n"):
                        yield line[:-1]

    def __iter__(self):
        return self.iter_records()

    def iter_records(self, years=None, providers=None):
        for line in self._lines(years, providers):
            yield SceneRecord.from_json(line)

    def iter_light(self, years=None, providers=None):
        """Yield (provider, scene_id, constellation, acquired_at, gsd_m, lon, lat) tuples."""
        for line in self._lines(years, providers):
            yield light_fields(line)

    def columns(self, years=None, providers=None) -> dict[str, np.ndarray]:
        """Columnar view of the scalar fields; ``acquired_at`` as datetime64[us] (UTC)."""
        heads = []
        for line in self._lines(years, providers):
            cut = line.find(_FOOTPRINT_MARK)
            heads.append(line[:cut] + "}" if cut >= 0 else line)
        # one decoder call for the whole batch is several times faster than one per line
        rows = [(d["provider"], d["scene_id"], d["constellation"], d["acquired_at"], d["gsd_m"],
                 d["centroid_lon"], d["centroid_lat"]) for d in json.loads("[" + ",".join(heads) + "]")]
        if not rows:
            return {"provider": np.array([], dtype=object), "scene_id": np.array([], dtype=object),
                    "constellation": np.array([], dtype=object),
                    "acquired_at": np.array([], dtype="datetime64[us]"),
                    "gsd_m": np.array([], dtype=float), "lon": np.array([], dtype=float),
                    "lat": np.array([], dtype=float)}
        prov, sid, const, when, gsd, lon, lat = zip(*rows)
        return {
            "provider": np.array(prov, dtype=object),
            "scene_id": np.array(sid, dtype=object),
            "constellation": np.array(const, dtype=object),
            "acquired_at": np.array([w.rstrip("Z") for w in when], dtype="datetime64[us]"),
            "gsd_m": np.array(gsd, dtype=float),
            "lon": np.array(lon, dtype=float),
            "lat": np.array(lat, dtype=float),
        }

    def canonical_bytes(self) -> bytes:
        """All scene lines sorted by (provider, scene_id); identical content gives identical bytes."""
        keyed = []
        for line in self._lines():
            f = light_fields(line)
            keyed.append(((f[0], f[1]), line))
        keyed.sort(key=lambda kv: kv[0])
        return "".join(line + "\n" for _, line in keyed).encode("utf-8")

    # -- aggregate tables ----------------------------------------------------

    def _agg_path(self, provider: str) -> Path:
        return self.root / "aggregates" / f"{_slug(provider)}.ndjson"

    def iter_aggregates(self):
        for path in sorted((self.root / "aggregates").glob("*.ndjson")):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.endswith("\n"):
                        yield json.loads(line)

    def append_aggregates(self, rows) -> int:
        """Append (provider, period, bucket, count[, gsd_bin]) rows, deduplicated on the first three."""
        with self._lock:
            if self._agg_keys is None:
                self._agg_keys = {(r["provider"], r["period"], r["bucket"]) for r in self.iter_aggregates()}
            grouped: dict[Path, list[str]] = {}
            for row in rows:
                key = (str(row["provider"]), str(row["period"]), str(row["bucket"]))
                if key in self._agg_keys:
                    continue
                count = int(row["count"])
                if count < 0:
                    raise StoreError(f"negative count in aggregate row {key}")
                self._agg_keys.add(key)
                doc = {"provider": key[0], "period": key[1], "bucket": key[2], "count": count}
                if row.get("gsd_bin"):
                    doc["gsd_bin"] = str(row["gsd_bin"])
                grouped.setdefault(self._agg_path(key[0]), []).append(json.dumps(doc, separators=(",", ":")))
            added = 0
            for path, lines in grouped.items():
                with open(path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write("".join(line + "\n" for line in lines))
                    fh.flush()
                    os.fsync(fh.fileno())
                added += len(lines)
            self.manifest["aggregate_count"] += added
            return added
