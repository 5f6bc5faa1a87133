"""Space-time counts of scene centroids over a small area."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

BUCKETS = ("month", "year")


def _bucket_starts(start: datetime, end: datetime, bucket: str) -> list[datetime]:
    """Calendar bucket boundaries covering [start, end), plus the closing boundary."""
    if bucket not in BUCKETS:
        raise ValueError(f"bucket must be one of {BUCKETS}")
    if bucket == "month":
        t = datetime(start.year, start.month, 1, tzinfo=timezone.utc)
    else:
        t = datetime(start.year, 1, 1, tzinfo=timezone.utc)
    out = [t]
    while out[-1] < end:
        t = out[-1]
        if bucket == "month":
            out.append(datetime(t.year + t.month // 12, t.month % 12 + 1, 1, tzinfo=timezone.utc))
        else:
            out.append(datetime(t.year + 1, 1, 1, tzinfo=timezone.utc))
    return out


def _label(t: datetime, bucket: str) -> str:
    return f"{t.year:04d}-{t.month:02d}" if bucket == "month" else f"{t.year:04d}"


@dataclass
class HeatmapCube:
    bbox: tuple[float, float, float, float]
    cell_size_deg: float
    bucket: str
    buckets: list[str]
    window: tuple[datetime, datetime]
    counts: np.ndarray          # (bucket, row, col), rows run south to north

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape[1:]

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        lon0, lat0 = self.bbox[0], self.bbox[1]
        return lon0 + (col + 0.5) * self.cell_size_deg, lat0 + (row + 0.5) * self.cell_size_deg

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["cell_lon", "cell_lat", "bucket", "count"])
            ny, nx = self.shape
            for k, label in enumerate(self.buckets):
                for r in range(ny):
                    for c in range(nx):
                        lon, lat = self.cell_center(r, c)
                        w.writerow([f"{lon:.6f}", f"{lat:.6f}", label, int(self.counts[k, r, c])])

    def geojson(self) -> dict:
        lon0, lat0, lon1, lat1 = self.bbox
        d = self.cell_size_deg
        feats = []
        ny, nx = self.shape
        for r in range(ny):
            for c in range(nx):
                a, b = lon0 + c * d, lat0 + r * d
                e, f = min(a + d, lon1), min(b + d, lat1)
                ring = [[a, b], [e, b], [e, f], [a, f], [a, b]]
                feats.append({"type": "Feature",
                              "properties": {"row": r, "col": c,
                                             "counts": {lab: int(self.counts[k, r, c])
                                                        for k, lab in enumerate(self.buckets)}},
                              "geometry": {"type": "Polygon", "coordinates": [[[round(x, 8), round(y, 8)]
                                                                                for x, y in ring]]}})
        return {"type": "FeatureCollection", "features": feats}


def _snap(x, origin, size, n):
    """Cell index with edges at ``origin + k * size`` exactly, last cell closed."""
    k = np.clip(np.floor((x - origin) / size).astype(np.int64), 0, n - 1)
    k = np.where((k > 0) & (x < origin + k * size), k - 1, k)
    return np.where((k < n - 1) & (x >= origin + (k + 1) * size), k + 1, k)


def heatmap_from_columns(lon, lat, when, bbox, cell_size_deg, bucket, window) -> HeatmapCube:
    """Bin points (``when`` as datetime64[us], UTC) into a cell x bucket cube.

    Cells are closed on the bbox's east and north edges so every point inside
    the bbox lands in exactly one cell; time buckets are half-open.
    """
    lon0, lat0, lon1, lat1 = map(float, bbox)
    if not (lon0 < lon1 and lat0 < lat1):
        raise ValueError(f"bbox {bbox} is not well ordered")
    if not cell_size_deg > 0:
        raise ValueError("cell_size_deg must be positive")
    start, end = window
    if not start < end:
        raise ValueError("window start must precede end")
    nx = max(1, math.ceil((lon1 - lon0) / cell_size_deg - 1e-9))
    ny = max(1, math.ceil((lat1 - lat0) / cell_size_deg - 1e-9))
    edges = _bucket_starts(start, end, bucket)
    labels = [_label(t, bucket) for t in edges[:-1]]
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    when = np.asarray(when, dtype="datetime64[us]")
    to64 = lambda t: np.datetime64(t.astimezone(timezone.utc).replace(tzinfo=None), "us")
    keep = ((lon >= lon0) & (lon <= lon1) & (lat >= lat0) & (lat <= lat1)
            & (when >= to64(start)) & (when < to64(end)))
    lon, lat, when = lon[keep], lat[keep], when[keep]
    col = _snap(lon, lon0, cell_size_deg, nx)
    row = _snap(lat, lat0, cell_size_deg, ny)
    k = np.searchsorted(np.array([to64(t) for t in edges]), when, side="right") - 1
    flat = np.bincount((k * ny + row) * nx + col, minlength=len(labels) * ny * nx)
    return HeatmapCube((lon0, lat0, lon1, lat1), float(cell_size_deg), bucket, labels, (start, end),
                       flat.reshape(len(labels), ny, nx))


def heatmap(store, bbox, cell_size_deg: float, bucket: str, window) -> HeatmapCube:
    """Centroid counts per grid cell and calendar bucket within ``window`` = [start, end)."""
    start, end = window
    end_year = (end.year - 1) if (end.month, end.day, end.hour, end.minute, end.second,
                                  end.microsecond) == (1, 1, 0, 0, 0, 0) else end.year
    cols = store.columns(years=set(range(start.year, end_year + 1)))
    return heatmap_from_columns(cols["lon"], cols["lat"], cols["acquired_at"], bbox, cell_size_deg, bucket, window)
