"""Ground tracks: TLE -> TEME state -> earth-fixed geodetic sub-satellite points."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import DecayedOrbit, PropagationError, PropagationWindowExceeded
from .geo import GeodeticPoint, ecef_to_geodetic
from .sgp4 import OK, NearEarthSgp4
from .tle import TleRecord, julian_day

WINDOW_GUARD_DAYS = 90.0
_STATUS_TEXT = {
    1: "mean eccentricity left [0, 1)",
    2: "mean motion became non-positive",
    4: "semi-latus rectum became negative",
    6: "orbit decayed below the earth surface",
}


@dataclass(frozen=True)
class EciState:
    t: datetime
    position: np.ndarray   # km, TEME
    velocity: np.ndarray   # km/s


def gmst(jd_whole, jd_frac=0.0):
    """Greenwich mean sidereal time (IAU-1982), radians in [0, 2pi)."""
    tut1 = ((np.asarray(jd_whole, dtype=float) - 2451545.0) + np.asarray(jd_frac, dtype=float)) / 36525.0
    sec = (-6.2e-6 * tut1 ** 3 + 0.093104 * tut1 ** 2
           + (876600.0 * 3600.0 + 8640184.812866) * tut1 + 67310.54841)
    theta = np.mod(np.radians(sec / 240.0), 2.0 * math.pi)
    return float(theta) if np.ndim(theta) == 0 else theta


def teme_to_geodetic(position, gmst_rad):
    """Rotate TEME positions into the earth-fixed frame and convert to WGS84 geodetic."""
    pos = np.asarray(position, dtype=float)
    c = np.cos(gmst_rad)
    s = np.sin(gmst_rad)
    x = c * pos[..., 0] + s * pos[..., 1]
    y = -s * pos[..., 0] + c * pos[..., 1]
    return ecef_to_geodetic(np.stack([x, y, pos[..., 2]], axis=-1))


def _jd(t: datetime):
    day = julian_day(t.year, t.month, t.day)
    frac = (t.hour * 3600 + t.minute * 60 + t.second + t.microsecond * 1e-6) / 86400.0
    return day, frac


def eci_to_geodetic(state: EciState) -> GeodeticPoint:
    if not np.all(np.isfinite(state.position)):
        raise ValueError("state position is not finite")
    lat, lon, alt = teme_to_geodetic(state.position, gmst(*_jd(state.t)))
    return GeodeticPoint(float(lat), float(lon), float(alt))


def _check_window(record: TleRecord, seconds):
    limit = WINDOW_GUARD_DAYS * 86400.0
    seconds = np.atleast_1d(seconds)
    bad = np.flatnonzero(np.abs(seconds) > limit)
    if len(bad):
        t = record.epoch + timedelta(seconds=float(seconds[bad[0]]))
        raise PropagationWindowExceeded(
            f"{t.isoformat()} is more than {WINDOW_GUARD_DAYS:.0f} days from epoch of {record.norad_id}", t=t
        )


def _raise_status(record, status, times):
    bad = np.flatnonzero(status != OK)
    if not len(bad):
        return
    code = int(status[bad[0]])
    t = times[bad[0]]
    cls = DecayedOrbit if code == 6 else PropagationError
    raise cls(f"satellite {record.norad_id} at {t.isoformat()}: {_STATUS_TEXT.get(code, code)}", t=t)


def propagate(record: TleRecord, t: datetime, model: NearEarthSgp4 | None = None) -> EciState:
    """TEME position/velocity of ``record`` at UTC instant ``t``."""
    seconds = record.seconds_since_epoch(t)
    _check_window(record, seconds)
    model = model or NearEarthSgp4(record)
    r, v, status = model.propagate(seconds / 60.0)
    _raise_status(record, np.atleast_1d(status), [t])
    return EciState(t, r, v)


@dataclass
class GroundTrack:
    """Sub-satellite points at ``start + k * step`` for ``k < len(lat)``."""

    norad_id: int
    start: datetime
    step: float
    lat: np.ndarray
    lon: np.ndarray
    alt: np.ndarray

    def __len__(self):
        return len(self.lat)

    @property
    def end(self) -> datetime:
        return self.start + timedelta(seconds=self.step * len(self))

    def time_at(self, index: int) -> datetime:
        return self.start + timedelta(seconds=self.step * int(index))

    @property
    def times(self) -> list[datetime]:
        return [self.time_at(k) for k in range(len(self))]

    @property
    def samples(self) -> list[GeodeticPoint]:
        return [GeodeticPoint(float(a), float(b), float(c)) for a, b, c in zip(self.lat, self.lon, self.alt)]


def ground_track(record: TleRecord, start: datetime, end: datetime, step: float = 60.0,
                 model: NearEarthSgp4 | None = None) -> GroundTrack:
    """Sample the sub-satellite point every ``step`` seconds over ``[start, end)``."""
    if not start < end:
        raise ValueError("window start must precede end")
    if not step > 0:
        raise ValueError("step must be positive")
    span = (end - start).total_seconds()
    n = int(math.ceil(span / step - 1e-9))
    offsets = np.arange(n, dtype=float) * step
    seconds = record.seconds_since_epoch(start) + offsets
    _check_window(record, seconds[[0, -1]])
    model = model or NearEarthSgp4(record)
    r, _, status = model.propagate(seconds / 60.0)
    if np.any(status != OK):
        bad = int(np.flatnonzero(status != OK)[0])
        _raise_status(record, status[bad:bad + 1], [start + timedelta(seconds=float(offsets[bad]))])
    day, frac = _jd(start)
    theta = gmst(day, frac + offsets / 86400.0)
    lat, lon, alt = teme_to_geodetic(r, theta)
    return GroundTrack(record.norad_id, start, float(step), lat, lon, alt)


# -- exports -----------------------------------------------------------------

def _iso(t: datetime) -> str:
    return t.isoformat().replace("+00:00", "Z")


def write_track_ndjson(tracks, path: str | Path) -> None:
    """One line per sample: norad_id, t, lat, lon, alt."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tr in tracks:
            for k in range(len(tr)):
                fh.write(json.dumps({
                    "norad_id": tr.norad_id, "t": _iso(tr.time_at(k)),
                    "lat": round(float(tr.lat[k]), 6), "lon": round(float(tr.lon[k]), 6),
                    "alt": round(float(tr.alt[k]), 3),
                }, separators=(",", ":")) + "\n")


def track_geojson(tracks) -> dict:
    """Tracks as MultiLineStrings, split where they cross the antimeridian."""
    features = []
    for tr in tracks:
        parts, current = [], []
        for k in range(len(tr)):
            pt = [round(float(tr.lon[k]), 6), round(float(tr.lat[k]), 6)]
            if current and abs(pt[0] - current[-1][0]) > 180.0:
                parts.append(current)
                current = []
            current.append(pt)
        if current:
            parts.append(current)
        features.append({
            "type": "Feature",
            "properties": {"norad_id": tr.norad_id, "start": _iso(tr.start), "step": tr.step},
            "geometry": {"type": "MultiLineString", "coordinates": [p for p in parts if len(p) > 1]},
        })
    return {"type": "FeatureCollection", "features": features}
