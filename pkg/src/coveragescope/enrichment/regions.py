"""Admin-1 regions, their covariates, and a packed R-tree for centroid assignment."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import AmbiguousContainmentWarning, MissingCovariateWarning, SchemaError
from ..geo import MEAN_EARTH_RADIUS_KM, GeodeticPoint, footprint_centroid, geometry_polygons, points_in_rings

UNASSIGNED = "unassigned"
COVARIATES = ("shdi", "income_index", "households", "area_km2", "cloud_cover_mean")


@dataclass
class Region:
    region_id: str
    polygons: list                      # list of polygons, each a list of (n, 2) lon/lat rings
    country_code: str = ""
    name: str = ""
    centroid: GeodeticPoint | None = None
    area_km2: float | None = None
    shdi: float | None = None
    income_index: float | None = None
    households: float | None = None
    cloud_cover_mean: float | None = None
    continent: str = ""
    flags: list = field(default_factory=list)

    def __post_init__(self):
        if self.centroid is None:
            self.centroid = _polygons_centroid(self.polygons)
        for key in ("shdi", "income_index", "cloud_cover_mean"):
            v = getattr(self, key)
            if v is not None and not 0.0 <= v <= 1.0:
                raise SchemaError(f"{key}={v} outside [0, 1]", self.region_id)
        if self.area_km2 is None:
            self.area_km2 = polygons_area_km2(self.polygons)
        if not self.area_km2 > 0:
            raise SchemaError(f"area_km2={self.area_km2} must be positive", self.region_id)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        pts = np.vstack([r for poly in self.polygons for r in poly])
        return float(pts[:, 0].min()), float(pts[:, 1].min()), float(pts[:, 0].max()), float(pts[:, 1].max())

    def contains(self, lon: float, lat: float) -> bool:
        return bool(any(points_in_rings([lon], [lat], poly)[0] for poly in self.polygons))

    @property
    def complete(self) -> bool:
        return self.shdi is not None and self.income_index is not None and self.households is not None


def _polygons_centroid(polygons) -> GeodeticPoint:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        geom = {"type": "MultiPolygon", "coordinates": [[r.tolist() for r in poly] for poly in polygons]}
        return footprint_centroid(geom)[0]


def polygons_area_km2(polygons) -> float:
    """Spherical area from per-ring line integrals (exact for rhumb-free small edges)."""
    total = 0.0
    for poly in polygons:
        for k, ring in enumerate(poly):
            lon = np.radians(ring[:, 0])
            lat = np.radians(ring[:, 1])
            dlon = np.diff(lon)
            dlon = (dlon + np.pi) % (2 * np.pi) - np.pi
            a = abs(float(np.sum(dlon * (2 + np.sin(lat[:-1]) + np.sin(lat[1:]))) / 2.0))
            total += a if k == 0 else -a
    return total * MEAN_EARTH_RADIUS_KM ** 2


def _float_or_none(value):
    if value is None or str(value).strip() in ("", "NA", "nan", "NaN", "null"):
        return None
    return float(value)


def load_boundaries(path: str | Path, id_property: str = "region_id") -> dict[str, tuple[list, dict]]:
    """GeoJSON FeatureCollection -> {id: (polygons, properties)}."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = {}
    for i, feat in enumerate(doc.get("features", [])):
        props = feat.get("properties") or {}
        rid = props.get(id_property)
        if rid is None:
            raise SchemaError(f"feature {i} has no {id_property!r} property")
        try:
            polys = geometry_polygons(feat["geometry"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"feature {rid}: {exc}", str(rid)) from None
        rid = str(rid)
        if rid in out:
            out[rid][0].extend(polys)
        else:
            out[rid] = (polys, props)
    return out


def load_regions(boundaries: str | Path, covariates: str | Path | None = None,
                 id_property: str = "region_id") -> list[Region]:
    """Join a boundary GeoJSON with a region_id-keyed covariate CSV; sorted by region_id."""
    shapes = load_boundaries(boundaries, id_property)
    table = {}
    if covariates is not None:
        with open(covariates, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                table[str(row["region_id"])] = row
    regions = []
    missing = []
    for rid in sorted(shapes):
        polys, props = shapes[rid]
        row = table.get(rid, {})
        vals = {k: _float_or_none(row.get(k, props.get(k))) for k in COVARIATES}
        region = Region(
            region_id=rid, polygons=polys,
            country_code=str(row.get("country_code") or props.get("country_code") or ""),
            name=str(row.get("name") or props.get("name") or ""),
            continent=str(row.get("continent") or props.get("continent") or ""),
            **vals,
        )
        if not region.complete:
            region.flags.append("missing-covariate")
            missing.append(rid)
        regions.append(region)
    if missing:
        warnings.warn(f"{len(missing)} region(s) lack covariates, e.g. {missing[:3]}", MissingCovariateWarning,
                      stacklevel=2)
    return regions


# -- spatial index -----------------------------------------------------------

class RegionIndex:
    """Sort-tile-recursive packed R-tree over polygon parts, confirmed by even-odd ray casting."""

    def __init__(self, regions, node_capacity: int = 16):
        self.regions = sorted(regions, key=lambda r: r.region_id)
        self.ids = [r.region_id for r in self.regions]
        parts, owner = [], []
        for k, region in enumerate(self.regions):
            for poly in region.polygons:
                parts.append(poly)
                owner.append(k)
        self.parts = parts
        self.owner = np.asarray(owner, dtype=np.int64)
        self.capacity = max(2, int(node_capacity))
        boxes = np.array([[min(r[:, 0].min() for r in p), min(r[:, 1].min() for r in p),
                           max(r[:, 0].max() for r in p), max(r[:, 1].max() for r in p)] for p in parts],
                         dtype=float).reshape(-1, 4)
        self._build(boxes)

    def _build(self, boxes):
        """Levels from the leaves up; each node's children are a contiguous slice of the level below."""
        n = len(boxes)
        order = np.arange(n)
        if n:
            m = self.capacity
            n_leaves = math.ceil(n / m)
            n_slices = math.ceil(math.sqrt(n_leaves))
            cx = 0.5 * (boxes[:, 0] + boxes[:, 2])
            cy = 0.5 * (boxes[:, 1] + boxes[:, 3])
            by_x = np.argsort(cx, kind="stable")
            per_slice = n_slices * m
            chunks = [by_x[s:s + per_slice] for s in range(0, n, per_slice)]
            order = np.concatenate([c[np.argsort(cy[c], kind="stable")] for c in chunks])
        self.entry_order = order
        boxes = boxes[order]
        levels = [(boxes, None)]
        while len(levels[-1][0]) > self.capacity or len(levels) == 1:
            child = levels[-1][0]
            starts = np.arange(0, len(child), self.capacity)
            ends = np.minimum(starts + self.capacity, len(child))
            if len(child):
                parent = np.column_stack([np.minimum.reduceat(child[:, 0], starts),
                                          np.minimum.reduceat(child[:, 1], starts),
                                          np.maximum.reduceat(child[:, 2], starts),
                                          np.maximum.reduceat(child[:, 3], starts)])
            else:
                parent = np.zeros((0, 4))
            levels.append((parent, np.column_stack([starts, ends])))
            if len(parent) <= 1:
                break
        self.levels = levels[::-1]         # root level first

    def candidates(self, lon, lat) -> tuple[np.ndarray, np.ndarray]:
        """(point index, part index) pairs whose part bounding box contains the point."""
        lon = np.asarray(lon, dtype=float)
        lat = np.asarray(lat, dtype=float)
        root_boxes, _ = self.levels[0]
        pi = np.repeat(np.arange(len(lon)), len(root_boxes))
        ni = np.tile(np.arange(len(root_boxes)), len(lon))
        for depth, (boxes, _) in enumerate(self.levels):
            b = boxes[ni]
            hit = (b[:, 0] <= lon[pi]) & (lon[pi] <= b[:, 2]) & (b[:, 1] <= lat[pi]) & (lat[pi] <= b[:, 3])
            pi, ni = pi[hit], ni[hit]
            if depth + 1 == len(self.levels):
                break
            spans = self.levels[depth][1][ni]
            widths = spans[:, 1] - spans[:, 0]
            pi = np.repeat(pi, widths)
            offsets = np.arange(widths.sum()) - np.repeat(np.cumsum(widths) - widths, widths)
            ni = np.repeat(spans[:, 0], widths) + offsets
        return pi, self.entry_order[ni]

    def assign(self, lon, lat) -> np.ndarray:
        """Index into ``self.regions`` per point, ``-1`` for unassigned.

        A point inside several regions goes to the lowest region_id and
        triggers :class:`AmbiguousContainmentWarning`.
        """
        lon = np.atleast_1d(np.asarray(lon, dtype=float))
        lat = np.atleast_1d(np.asarray(lat, dtype=float))
        out = np.full(len(lon), -1, dtype=np.int64)
        if not len(self.parts) or not len(lon):
            return out
        pi, part = self.candidates(lon, lat)
        if not len(pi):
            return out
        order = np.argsort(part, kind="stable")
        pi, part = pi[order], part[order]
        bounds = np.flatnonzero(np.r_[True, part[1:] != part[:-1], True])
        hit_p, hit_r = [], []
        for a, b in zip(bounds[:-1], bounds[1:]):
            pts = pi[a:b]
            inside = points_in_rings(lon[pts], lat[pts], self.parts[part[a]])
            hit_p.append(pts[inside])
            hit_r.append(np.full(int(inside.sum()), self.owner[part[a]]))
        if not hit_p:
            return out
        hp = np.concatenate(hit_p)
        hr = np.concatenate(hit_r)
        if not len(hp):
            return out
        # lowest region index (== lowest region_id) wins
        sel = np.lexsort((hr, hp))
        hp, hr = hp[sel], hr[sel]
        first = np.r_[True, hp[1:] != hp[:-1]]
        out[hp[first]] = hr[first]
        multi = np.unique(hp[~first & np.r_[False, hr[1:] != hr[:-1]]])
        if len(multi):
            warnings.warn(f"{len(multi)} point(s) fall in more than one region; lowest region_id used",
                          AmbiguousContainmentWarning, stacklevel=2)
        return out

    def region_ids(self, lon, lat) -> list[str]:
        return [self.ids[k] if k >= 0 else UNASSIGNED for k in self.assign(lon, lat)]


def assign_scene(scene, regions) -> str:
    """Region id containing the scene centroid, or ``"unassigned"``."""
    index = regions if isinstance(regions, RegionIndex) else RegionIndex(regions)
    return index.region_ids([scene.centroid.lon], [scene.centroid.lat])[0]
