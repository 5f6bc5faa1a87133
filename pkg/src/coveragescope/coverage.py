"""Earth grid, swath membership and revisit (pass) counting."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import WindowMismatch
from .geo import MEAN_EARTH_RADIUS_KM, GeodeticPoint, haversine_km, unit_vectors
from .propagator import GroundTrack


@dataclass(frozen=True)
class GridSpec:
    edge_km: float = 500.0


@dataclass(frozen=True)
class GridTile:
    id: int
    lat_band: int
    bounds: tuple[float, float, float, float]   # lat_min, lat_max, lon_min, lon_max
    centroid: GeodeticPoint


@dataclass
class EarthGrid:
    """Quasi-equal-area latitude/longitude grid; tile arrays are indexed by tile id."""

    spec: GridSpec
    band: np.ndarray
    lat_min: np.ndarray
    lat_max: np.ndarray
    lon_min: np.ndarray
    lon_max: np.ndarray
    n_bands: int

    @property
    def lat_center(self) -> np.ndarray:
        return 0.5 * (self.lat_min + self.lat_max)

    @property
    def lon_center(self) -> np.ndarray:
        return 0.5 * (self.lon_min + self.lon_max)

    @property
    def band_centers(self) -> np.ndarray:
        edges = np.linspace(-90.0, 90.0, self.n_bands + 1)
        return 0.5 * (edges[:-1] + edges[1:])

    def __len__(self):
        return len(self.band)

    @property
    def tiles(self) -> list[GridTile]:
        return [self.tile(i) for i in range(len(self))]

    def tile(self, tile_id: int) -> GridTile:
        i = int(tile_id)
        return GridTile(
            i, int(self.band[i]),
            (float(self.lat_min[i]), float(self.lat_max[i]), float(self.lon_min[i]), float(self.lon_max[i])),
            GeodeticPoint(float(self.lat_center[i]), float(self.lon_center[i]), 0.0),
        )

    def locate(self, lat, lon) -> np.ndarray:
        """Tile ids containing the given points (half-open cells; lat 90 goes to the top band)."""
        lat = np.asarray(lat, dtype=float)
        lon = np.asarray(lon, dtype=float)
        band = np.clip(np.searchsorted(self._lat_edges, lat, side="right") - 1, 0, self.n_bands - 1)
        first = self._band_first[band]
        ncell = self._band_cells[band]
        cell = np.clip(((lon + 180.0) / 360.0 * ncell).astype(int), 0, ncell - 1)
        # the scaled estimate can land one cell off for values a rounding error from an edge
        cell = np.where((cell > 0) & (lon < self.lon_min[first + cell]), cell - 1, cell)
        cell = np.where((cell < ncell - 1) & (lon >= self.lon_max[first + cell]), cell + 1, cell)
        return first + cell

    def __post_init__(self):
        counts = np.bincount(self.band, minlength=self.n_bands)
        self._band_cells = counts
        self._band_first = np.concatenate([[0], np.cumsum(counts)[:-1]])
        self._lat_edges = np.linspace(-90.0, 90.0, self.n_bands + 1)


def build_grid(edge_km: float = 500.0) -> EarthGrid:
    """Latitude bands of equal height, each split into roughly ``edge_km``-wide cells."""
    if not 50.0 <= edge_km <= 5000.0:
        raise ValueError("edge_km must be within [50, 5000]")
    n_bands = int(round(math.pi * MEAN_EARTH_RADIUS_KM / edge_km))
    edges = np.linspace(-90.0, 90.0, n_bands + 1)
    band, lat0, lat1, lon0, lon1 = [], [], [], [], []
    for b in range(n_bands):
        mid = 0.5 * (edges[b] + edges[b + 1])
        circumference = 2.0 * math.pi * MEAN_EARTH_RADIUS_KM * math.cos(math.radians(mid))
        n_cells = max(1, int(round(circumference / edge_km)))
        lon_edges = np.linspace(-180.0, 180.0, n_cells + 1)
        band.extend([b] * n_cells)
        lat0.extend([edges[b]] * n_cells)
        lat1.extend([edges[b + 1]] * n_cells)
        lon0.extend(lon_edges[:-1])
        lon1.extend(lon_edges[1:])
    return EarthGrid(GridSpec(float(edge_km)), np.array(band), np.array(lat0), np.array(lat1),
                     np.array(lon0), np.array(lon1), n_bands)


def in_swath(point: GeodeticPoint, centroid: GeodeticPoint, buffer_km: float = 250.0) -> bool:
    """True iff the great-circle distance is within ``buffer_km``."""
    return haversine_km(point.lat, point.lon, centroid.lat, centroid.lon) <= buffer_km


@dataclass(frozen=True)
class PassEvent:
    norad_id: int
    target_id: object
    t_enter: datetime
    t_exit: datetime


@dataclass
class RevisitMap:
    grid: EarthGrid
    counts: np.ndarray                  # per tile id
    window: tuple[datetime, datetime]
    satellites: list[int] = field(default_factory=list)

    def as_dict(self) -> dict[int, int]:
        return {i: int(c) for i, c in enumerate(self.counts)}


def _common_window(tracks):
    keys = {(tr.start, tr.step, len(tr)) for tr in tracks}
    if len(keys) > 1:
        raise WindowMismatch(f"tracks do not share one window: {sorted(keys, key=str)}")
    return keys.pop() if keys else None


def _segment(point_idx, sample_idx, step, gap_threshold):
    """Split sorted (point, sample) hits into passes; returns (points, first, last) per pass."""
    if not len(point_idx):
        empty = np.zeros(0, dtype=int)
        return empty, empty, empty
    order = np.lexsort((sample_idx, point_idx))
    p = point_idx[order]
    s = sample_idx[order]
    new = np.ones(len(p), dtype=bool)
    new[1:] = (p[1:] != p[:-1]) | ((s[1:] - s[:-1]) * step > gap_threshold)
    starts = np.flatnonzero(new)
    ends = np.concatenate([starts[1:], [len(p)]]) - 1
    return p[starts], s[starts], s[ends]


def track_hits(track: GroundTrack, point_lat, point_lon, buffer_km: float = 250.0, tree=None):
    """All (point index, sample index) pairs with the sample inside the point's buffer."""
    if tree is None:
        tree = cKDTree(unit_vectors(point_lat, point_lon))
    samples = cKDTree(unit_vectors(track.lat, track.lon))
    # chord radius, padded; every candidate is confirmed with the haversine test below
    chord = 2.0 * math.sin(min(buffer_km / MEAN_EARTH_RADIUS_KM, math.pi) / 2.0) * (1.0 + 1e-6) + 1e-9
    pairs = tree.query_ball_tree(samples, chord)
    pi = np.repeat(np.arange(len(pairs)), [len(x) for x in pairs])
    si = np.fromiter((j for x in pairs for j in x), dtype=int, count=len(pi))
    if len(pi):
        d = haversine_km(np.asarray(point_lat)[pi], np.asarray(point_lon)[pi], track.lat[si], track.lon[si])
        keep = d <= buffer_km
        pi, si = pi[keep], si[keep]
    return pi, si


def count_point_passes(tracks, point_lat, point_lon, point_ids=None, buffer_km: float = 250.0,
                       gap_threshold: float = 300.0):
    """Pass counts per target point plus the pass events behind them."""
    point_lat = np.asarray(point_lat, dtype=float)
    point_lon = np.asarray(point_lon, dtype=float)
    counts = np.zeros(len(point_lat), dtype=np.int64)
    events: list[PassEvent] = []
    window = _common_window(tracks)
    if window is None or not len(point_lat):
        return counts, events
    step = window[1]
    if step > gap_threshold:
        raise ValueError("sampling step exceeds the pass gap threshold")
    tree = cKDTree(unit_vectors(point_lat, point_lon))
    ids = list(range(len(point_lat))) if point_ids is None else list(point_ids)
    for tr in tracks:
        pi, si = track_hits(tr, point_lat, point_lon, buffer_km, tree=tree)
        pts, first, last = _segment(pi, si, step, gap_threshold)
        np.add.at(counts, pts, 1)
        events.extend(PassEvent(tr.norad_id, ids[p], tr.time_at(a), tr.time_at(b))
                      for p, a, b in zip(pts, first, last))
    events.sort(key=lambda e: (e.t_enter, e.norad_id, str(e.target_id)))
    return counts, events


def count_revisits(tracks, grid: EarthGrid, buffer_km: float = 250.0, gap_threshold: float = 300.0):
    """Revisit counts per grid tile: number of distinct passes whose buffer holds the tile centroid."""
    counts, events = count_point_passes(tracks, grid.lat_center, grid.lon_center, None, buffer_km, gap_threshold)
    window = _common_window(tracks)
    win = (window[0], tracks[0].end) if window else (None, None)
    return RevisitMap(grid, counts, win, [tr.norad_id for tr in tracks]), events


def region_revisits(tracks, regions, buffer_km: float = 250.0, gap_threshold: float = 300.0) -> dict:
    """Pass counts per region, tested against each region's centroid."""
    lat = [r.centroid.lat for r in regions]
    lon = [r.centroid.lon for r in regions]
    ids = [r.region_id for r in regions]
    counts, _ = count_point_passes(tracks, lat, lon, ids, buffer_km, gap_threshold)
    return {rid: int(c) for rid, c in zip(ids, counts)}


def latitude_profile(revisits: RevisitMap) -> list[tuple[float, float]]:
    """Mean tile count per latitude band, south to north."""
    grid = revisits.grid
    if not len(grid):
        raise ValueError("empty revisit map")
    sums = np.bincount(grid.band, weights=revisits.counts.astype(float), minlength=grid.n_bands)
    n = np.bincount(grid.band, minlength=grid.n_bands)
    return [(float(c), float(s / k)) for c, s, k in zip(grid.band_centers, sums, n)]


# -- exports -----------------------------------------------------------------

def write_revisit_csv(revisits: RevisitMap, path) -> None:
    g = revisits.grid
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["tile_id", "lat_center", "lon_center", "count"])
        for i in range(len(g)):
            w.writerow([i, f"{g.lat_center[i]:.6f}", f"{g.lon_center[i]:.6f}", int(revisits.counts[i])])


def revisit_geojson(revisits: RevisitMap) -> dict:
    g = revisits.grid
    feats = []
    for i in range(len(g)):
        a, b, c, d = g.lat_min[i], g.lat_max[i], g.lon_min[i], g.lon_max[i]
        ring = [[c, a], [d, a], [d, b], [c, b], [c, a]]
        feats.append({
            "type": "Feature",
            "properties": {"tile_id": i, "count": int(revisits.counts[i])},
            "geometry": {"type": "Polygon", "coordinates": [[[round(x, 6), round(y, 6)] for x, y in ring]]},
        })
    return {"type": "FeatureCollection", "features": feats}


def write_profile_csv(profile, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["lat_band_center", "mean_count"])
        for lat, mean in profile:
            w.writerow([f"{lat:.4f}", f"{mean:.6f}"])


def write_pass_events(events, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in events:
            fh.write(json.dumps({
                "norad_id": e.norad_id, "target_id": e.target_id,
                "t_enter": e.t_enter.isoformat().replace("+00:00", "Z"),
                "t_exit": e.t_exit.isoformat().replace("+00:00", "Z"),
            }, separators=(",", ":")) + "\n")
