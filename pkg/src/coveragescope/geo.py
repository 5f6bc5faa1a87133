"""Geodesy and planar geometry helpers shared by coverage, harvesting and enrichment."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryWarning

MEAN_EARTH_RADIUS_KM = 6371.0088
WGS84_A_KM = 6378.137
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)


@dataclass(frozen=True)
class GeodeticPoint:
    lat: float
    lon: float
    alt: float = 0.0


def normalize_lon(lon):
    """Wrap longitudes (degrees) into [-180, 180)."""
    out = np.mod(np.asarray(lon, dtype=float) + 180.0, 360.0) - 180.0
    out = np.where(out >= 180.0, out - 360.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def haversine_km(lat1, lon1, lat2, lon2, radius_km=MEAN_EARTH_RADIUS_KM):
    """Great-circle distance on a sphere, degrees in, km out (broadcasts)."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    dp = p2 - p1
    dl = np.radians(np.asarray(lon2, dtype=float) - np.asarray(lon1, dtype=float))
    a = np.sin(dp / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2.0) ** 2
    d = 2.0 * radius_km * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    return float(d) if np.ndim(d) == 0 else d


def unit_vectors(lat, lon):
    """Unit vectors on the sphere for geodetic degrees (spherical approximation)."""
    la = np.radians(np.asarray(lat, dtype=float))
    lo = np.radians(np.asarray(lon, dtype=float))
    c = np.cos(la)
    return np.stack([c * np.cos(lo), c * np.sin(lo), np.sin(la)], axis=-1)


# -- WGS84 ellipsoid ---------------------------------------------------------

def geodetic_to_ecef(lat, lon, alt):
    """WGS84 geodetic (deg, deg, km) to earth-fixed cartesian km."""
    la = np.radians(lat)
    lo = np.radians(lon)
    s = np.sin(la)
    n = WGS84_A_KM / np.sqrt(1.0 - WGS84_E2 * s * s)
    x = (n + alt) * np.cos(la) * np.cos(lo)
    y = (n + alt) * np.cos(la) * np.sin(lo)
    z = (n * (1.0 - WGS84_E2) + alt) * s
    return np.stack([x, y, z], axis=-1)


def ecef_to_geodetic(xyz):
    """Earth-fixed cartesian km to WGS84 (lat deg, lon deg, alt km); iterative latitude."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    p = np.hypot(x, y)
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    for _ in range(8):
        s = np.sin(lat)
        n = WGS84_A_KM / np.sqrt(1.0 - WGS84_E2 * s * s)
        lat = np.arctan2(z + WGS84_E2 * n * s, p)
    s = np.sin(lat)
    c = np.cos(lat)
    alt = p * c + z * s - WGS84_A_KM * np.sqrt(1.0 - WGS84_E2 * s * s)
    lon = normalize_lon(np.degrees(np.arctan2(y, x)))
    return np.degrees(lat), lon, alt


# -- polygons ----------------------------------------------------------------
#
# Polygons are lists of rings, each ring an (n, 2) sequence of (lon, lat).
# Containment uses the even-odd rule over *all* rings, so holes and
# multipolygon parts need no special casing.

def geometry_rings(geometry) -> list[np.ndarray]:
    """Flatten a GeoJSON Polygon/MultiPolygon dict (or a ring list) into rings."""
    if isinstance(geometry, dict):
        kind = geometry.get("type")
        coords = geometry.get("coordinates")
        if kind == "Polygon":
            polys = [coords]
        elif kind == "MultiPolygon":
            polys = coords
        else:
            raise ValueError(f"unsupported geometry type {kind!r}")
        return [np.asarray(ring, dtype=float)[:, :2] for poly in polys for ring in poly]
    return [np.asarray(ring, dtype=float)[:, :2] for ring in geometry]


def geometry_polygons(geometry) -> list[list[np.ndarray]]:
    """Polygons (exterior first, then holes) of a GeoJSON Polygon/MultiPolygon."""
    kind = geometry.get("type")
    coords = geometry["coordinates"]
    polys = [coords] if kind == "Polygon" else coords
    if kind not in ("Polygon", "MultiPolygon"):
        raise ValueError(f"unsupported geometry type {kind!r}")
    return [[np.asarray(r, dtype=float)[:, :2] for r in poly] for poly in polys]


def points_in_rings(px, py, rings) -> np.ndarray:
    """Even-odd ray casting of many points against a set of rings."""
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    inside = np.zeros(px.shape, dtype=bool)
    for ring in rings:
        xi, yi = ring[:, 0], ring[:, 1]
        xj, yj = np.roll(xi, 1), np.roll(yi, 1)
        keep = yi != yj
        xi, yi, xj, yj = xi[keep], yi[keep], xj[keep], yj[keep]
        if not len(xi):
            continue
        slope = (xj - xi) / (yj - yi)
        chunk = max(1, 2_000_000 // len(xi))
        for s in range(0, len(px), chunk):
            qx = px[s:s + chunk, None]
            qy = py[s:s + chunk, None]
            cond = (yi > qy) != (yj > qy)
            x_cross = slope * (qy - yi) + xi
            crossings = np.count_nonzero(cond & (qx < x_cross), axis=1)
            inside[s:s + chunk] ^= (crossings % 2).astype(bool)
    return inside


def ring_signed_area(ring) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _ring_moments(x, y):
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / 6.0
    cy = ((y + yn) * cross).sum() / 6.0
    return a, cx, cy


def _unwrap_ring(lon):
    out = np.array(lon, dtype=float)
    steps = np.diff(out)
    shift = np.concatenate([[0.0], np.cumsum(-360.0 * np.round(steps / 360.0))])
    return out + shift


def footprint_centroid(footprint) -> tuple[GeodeticPoint, bool]:
    """Area-weighted centroid of a lon/lat footprint.

    The footprint is projected equirectangularly about its bounding-box
    center after unwrapping longitudes across the antimeridian. Returns
    ``(point, degenerate)``; zero-area input falls back to the vertex mean
    and emits :class:`DegenerateGeometryWarning`.
    """
    if isinstance(footprint, dict):
        polys = geometry_polygons(footprint)
    else:
        polys = [[np.asarray(r, dtype=float)[:, :2] for r in footprint]]
    for poly in polys:
        for ring in poly:
            if len(ring) < 4 or not np.allclose(ring[0], ring[-1]):
                raise ValueError("rings must be closed and have at least 4 positions")

    ref_lon = polys[0][0][0, 0]
    unwrapped = []
    for poly in polys:
        rings = []
        for ring in poly:
            lon = _unwrap_ring(ring[:, 0])
            lon = lon - 360.0 * np.round((lon[0] - ref_lon) / 360.0)
            rings.append(np.column_stack([lon, ring[:, 1]]))
        unwrapped.append(rings)

    all_pts = np.vstack([r for poly in unwrapped for r in poly])
    lon0 = 0.5 * (all_pts[:, 0].min() + all_pts[:, 0].max())
    lat0 = 0.5 * (all_pts[:, 1].min() + all_pts[:, 1].max())
    k = math.cos(math.radians(lat0))

    area = sx = sy = 0.0
    for poly in unwrapped:
        for idx, ring in enumerate(poly):
            x = (ring[:, 0] - lon0) * k
            y = ring[:, 1] - lat0
            a, cx, cy = _ring_moments(x, y)
            # exterior counts positive, holes negative, whatever the winding
            sign = (1.0 if idx == 0 else -1.0) * (1.0 if a >= 0 else -1.0)
            area += sign * a
            sx += sign * cx
            sy += sign * cy

    scale = max(np.ptp(all_pts[:, 0]) * k, np.ptp(all_pts[:, 1]), 1e-300)
    if abs(area) <= 1e-12 * scale * scale or k == 0.0:
        warnings.warn("zero-area footprint; using vertex mean", DegenerateGeometryWarning, stacklevel=2)
        verts = np.vstack([r[:-1] for poly in unwrapped for r in poly])
        return GeodeticPoint(float(verts[:, 1].mean()), normalize_lon(float(verts[:, 0].mean()))), True
    cx = sx / area / k + lon0
    cy = sy / area + lat0
    return GeodeticPoint(float(cy), normalize_lon(float(cx))), False
