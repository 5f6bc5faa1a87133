"""Scene metadata records and STAC item parsing."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone

from pydantic import TypeAdapter, ValidationError

from ..errors import DegenerateGeometryWarning, SchemaError
from ..geo import GeodeticPoint, footprint_centroid

FLAGS_KEY = "coveragescope:flags"
STORE_KEYS = ("provider", "scene_id", "constellation", "acquired_at", "gsd_m",
              "centroid_lon", "centroid_lat", "footprint", "raw_properties")

_datetime = TypeAdapter(datetime)


def parse_rfc3339(text: str) -> datetime:
    try:
        t = _datetime.validate_python(text)
    except ValidationError:
        raise SchemaError(f"not an RFC 3339 datetime: {text!r}") from None
    if t.tzinfo is None:
        raise SchemaError(f"datetime without offset: {text!r}")
    return t.astimezone(timezone.utc)


def format_rfc3339(t: datetime) -> str:
    t = t.astimezone(timezone.utc)
    fmt = "%Y-%m-%dT%H:%M:%S.%fZ" if t.microsecond else "%Y-%m-%dT%H:%M:%SZ"
    return t.strftime(fmt)


@dataclass(frozen=True)
class SceneRecord:
    provider: str
    scene_id: str
    constellation: str
    acquired_at: datetime
    gsd_m: float
    footprint: dict
    centroid: GeodeticPoint
    raw_properties: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str]:
        return self.provider, self.scene_id

    @property
    def flags(self) -> list[str]:
        return list(self.raw_properties.get(FLAGS_KEY, []))

    def to_json(self) -> str:
        doc = {
            "provider": self.provider,
            "scene_id": self.scene_id,
            "constellation": self.constellation,
            "acquired_at": format_rfc3339(self.acquired_at),
            "gsd_m": self.gsd_m,
            "centroid_lon": self.centroid.lon,
            "centroid_lat": self.centroid.lat,
            "footprint": self.footprint,
            "raw_properties": self.raw_properties,
        }
        return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "SceneRecord":
        d = json.loads(line)
        return cls(
            provider=d["provider"], scene_id=d["scene_id"], constellation=d["constellation"],
            acquired_at=parse_rfc3339(d["acquired_at"]), gsd_m=d["gsd_m"], footprint=d["footprint"],
            centroid=GeodeticPoint(d["centroid_lat"], d["centroid_lon"], 0.0),
            raw_properties=d["raw_properties"],
        )


def item_to_record(item: dict, provider: str, nominal_gsd: dict[str, float] | None = None) -> SceneRecord:
    """Convert one STAC Item into a :class:`SceneRecord`; raises :class:`SchemaError`.

    GSD falls back from ``properties.gsd`` to ``eo:gsd`` to the nominal GSD of
    the item's constellation, in that order. Fallbacks are recorded in the
    record's flags.
    """
    item_id = item.get("id") if isinstance(item, dict) else None
    if not isinstance(item_id, str) or not item_id:
        raise SchemaError("item has no id", item_id)
    props = item.get("properties")
    geometry = item.get("geometry")
    if not isinstance(props, dict):
        raise SchemaError("item has no properties", item_id)
    if not isinstance(geometry, dict) or geometry.get("type") not in ("Polygon", "MultiPolygon"):
        raise SchemaError("item geometry must be a Polygon or MultiPolygon", item_id)

    when = props.get("datetime") or props.get("start_datetime")
    if not isinstance(when, str):
        raise SchemaError("item has neither datetime nor start_datetime", item_id)
    acquired = parse_rfc3339(when)

    constellation = str(props.get("constellation") or props.get("platform") or "")
    flags = []
    gsd = props.get("gsd")
    if gsd is None:
        gsd = props.get("eo:gsd")
        if gsd is not None:
            flags.append("gsd:eo")
    if gsd is None and nominal_gsd:
        gsd = nominal_gsd.get(constellation.lower())
        if gsd is not None:
            flags.append("gsd:nominal")
    if gsd is None:
        raise SchemaError("item lacks properties.gsd and eo:gsd", item_id)
    try:
        gsd = float(gsd)
    except (TypeError, ValueError):
        raise SchemaError(f"gsd {gsd!r} is not numeric", item_id) from None
    if not (gsd > 0 and math.isfinite(gsd)):
        raise SchemaError(f"gsd {gsd} must be positive", item_id)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateGeometryWarning)
        try:
            centroid, degenerate = footprint_centroid(geometry)
        except (ValueError, IndexError, TypeError, KeyError) as exc:
            raise SchemaError(f"bad geometry: {exc}", item_id) from None
    if degenerate:
        flags.append("centroid:vertex-mean")

    raw = dict(props)
    if flags:
        raw[FLAGS_KEY] = flags
    return SceneRecord(provider, item_id, constellation, acquired, gsd, geometry, centroid, raw)
