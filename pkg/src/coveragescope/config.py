"""JSON run configuration."""
from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Window(_Model):
    start: datetime
    end: datetime

    @field_validator("start", "end")
    @classmethod
    def _utc(cls, v: datetime) -> datetime:
        if v.tzinfo is None:
            raise ValueError("datetimes need an explicit UTC offset")
        return v.astimezone(timezone.utc)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.start < self.end:
            raise ValueError("window start must precede end")
        return self


class Constellation(_Model):
    name: str
    satellite_ids: list[int] = Field(min_length=1)
    swath_buffer_km: float = Field(250.0, gt=0, le=5000)
    gsd_m: float = Field(gt=0)


class StacSource(_Model):
    provider: str = Field(min_length=1)
    endpoint: str
    collections: list[str] = []
    bbox: tuple[float, float, float, float] = (-180.0, -90.0, 180.0, 90.0)
    time_range: Window
    method: Literal["GET", "POST"] = "GET"
    page_size: int = Field(200, ge=1, le=10_000)
    token_env: str | None = Field(None, pattern=r"^[A-Za-z_][A-Za-z0-9_]*$")


class AggregateTable(_Model):
    provider: str
    path: Path


class HeatmapQuery(_Model):
    name: str = Field(pattern=r"^[A-Za-z0-9_.-]+$")
    bbox: tuple[float, float, float, float]
    cell_size_deg: float = Field(gt=0)
    bucket: Literal["month", "year"] = "month"
    window: Window


class ToolkitConfig(_Model):
    tle_files: list[Path] = []
    constellations: list[Constellation] = []
    grid_edge_km: float = Field(500.0, ge=50, le=5000)
    buffer_km: float = Field(250.0, gt=0, le=5000)
    step_seconds: float = Field(60.0, gt=0, le=300)
    gap_threshold_s: float = Field(300.0, gt=0)
    window: Window | None = None

    stac: list[StacSource] = []
    aggregate_tables: list[AggregateTable] = []
    rate_limit: float = Field(5.0, gt=0)
    max_concurrency: int = Field(4, ge=1, le=64)
    max_retries: int = Field(5, ge=1, le=20)

    boundaries: Path | None = None
    covariates: Path | None = None
    continents: Path | None = None
    region_id_property: str = "region_id"
    years: tuple[int, int] = (2017, 2023)
    cloud_endpoint: str | None = None
    cloud_year: int = 2023
    planet_providers: list[str] = ["planet"]

    heatmaps: list[HeatmapQuery] = []
    output_dir: Path = Path("out")
    seed: int = 0

    @model_validator(mode="after")
    def _checks(self):
        if self.years[0] > self.years[1]:
            raise ValueError("years must be ascending")
        if self.step_seconds > self.gap_threshold_s:
            raise ValueError("step_seconds must not exceed gap_threshold_s")
        return self

    @property
    def nominal_gsd(self) -> dict[str, float]:
        return {c.name.lower(): c.gsd_m for c in self.constellations}

    def resolved(self, base: Path) -> "ToolkitConfig":
        """Copy with relative paths anchored at ``base``."""
        fix = lambda p: p if p is None or p.is_absolute() else (base / p)
        upd = {"tle_files": [fix(p) for p in self.tle_files], "output_dir": fix(self.output_dir),
               "boundaries": fix(self.boundaries), "covariates": fix(self.covariates),
               "continents": fix(self.continents),
               "aggregate_tables": [a.model_copy(update={"path": fix(a.path)}) for a in self.aggregate_tables]}
        return self.model_copy(update=upd)

    def dump(self) -> str:
        return self.model_dump_json(indent=2)


def load_config(path: str | Path) -> ToolkitConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    try:
        cfg = ToolkitConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg.resolved(path.resolve().parent)


def require_paths(*paths) -> None:
    for label, p in paths:
        if p is None:
            raise ConfigError(f"config lacks {label}")
        if not Path(p).exists():
            raise ConfigError(f"{label} {p} does not exist")
