"""Per-region image counts joined with covariates, and the tables built from them."""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import MissingCovariateWarning, SchemaError
from .gsd import LABELS, gsd_codes
from .regions import UNASSIGNED, Region, RegionIndex

COVARIATE_COLUMNS = ("shdi", "income_index", "households", "area_km2", "abs_lat", "abs_lon", "cloud_cover_mean")
DEFAULT_AGGREGATE_BIN = ">3.0"


def count_column(provider: str, bin_label: str) -> str:
    return f"count__{provider}__{bin_label}"


@dataclass
class RegionalTable:
    """Flat per-region table: identifiers, covariates and windowed counts by (provider, bin)."""

    region_id: list[str]
    country_code: list[str]
    continent: list[str]
    covariates: dict[str, np.ndarray]
    counts: dict[tuple[str, str], np.ndarray]
    months: int

    def __len__(self):
        return len(self.region_id)

    @property
    def providers(self) -> list[str]:
        return sorted({p for p, _ in self.counts})

    def image_counts(self, providers=None, exclude=(), bins=None) -> np.ndarray:
        """Summed counts per region for the selected providers and bins."""
        out = np.zeros(len(self), dtype=float)
        for (p, b), col in self.counts.items():
            if providers is not None and p not in providers:
                continue
            if p in exclude or (bins is not None and b not in bins):
                continue
            out += col
        return out

    def monthly_average(self, **selection) -> np.ndarray:
        return self.image_counts(**selection) / self.months

    def complete_rows(self, columns) -> np.ndarray:
        mask = np.ones(len(self), dtype=bool)
        for c in columns:
            mask &= np.isfinite(self.covariates[c])
        return mask

    def write_csv(self, path) -> None:
        keys = sorted(self.counts)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["region_id", "country_code", "continent", *COVARIATE_COLUMNS, "months",
                        *(count_column(p, b) for p, b in keys)])
            for i, rid in enumerate(self.region_id):
                cov = ["" if not np.isfinite(self.covariates[c][i]) else repr(float(self.covariates[c][i]))
                       for c in COVARIATE_COLUMNS]
                w.writerow([rid, self.country_code[i], self.continent[i], *cov, self.months,
                            *(int(self.counts[k][i]) for k in keys)])


def read_regional_table(path) -> RegionalTable:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SchemaError(f"{path} holds no regions")
    missing = [c for c in ("region_id", *COVARIATE_COLUMNS, "months") if c not in rows[0]]
    if missing:
        raise SchemaError(f"{path} lacks columns {missing}")
    covs = {c: np.array([float(r[c]) if r[c] != "" else np.nan for r in rows]) for c in COVARIATE_COLUMNS}
    counts = {}
    for col in rows[0]:
        if col.startswith("count__"):
            _, provider, label = col.split("__", 2)
            counts[(provider, label)] = np.array([float(r[col]) for r in rows])
    return RegionalTable([r["region_id"] for r in rows], [r.get("country_code", "") for r in rows],
                         [r.get("continent", "") for r in rows], covs, counts, int(rows[0]["months"]))


@dataclass
class RegionalDataset:
    regions: list[Region]
    providers: tuple[str, ...]
    years: tuple[int, ...]
    counts: np.ndarray          # (provider, bin, year, region)
    unassigned: np.ndarray      # (provider, bin, year)
    totals: np.ndarray          # (provider, bin, year): every input record in the window
    flags: dict[str, list[str]] = field(default_factory=dict)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    @property
    def months(self) -> int:
        return 12 * len(self.years)

    def partition_holds(self) -> bool:
        return bool(np.array_equal(self.counts.sum(axis=-1) + self.unassigned, self.totals))

    def count(self, region_id: str, provider: str, bin_label: str, year: int) -> int:
        ids = [r.region_id for r in self.regions]
        return int(self.counts[self.providers.index(provider), LABELS.index(bin_label), self.years.index(year),
                               ids.index(region_id)])

    def table(self) -> RegionalTable:
        regs = self.regions
        covs = {
            "shdi": [r.shdi for r in regs], "income_index": [r.income_index for r in regs],
            "households": [r.households for r in regs], "area_km2": [r.area_km2 for r in regs],
            "abs_lat": [abs(r.centroid.lat) for r in regs], "abs_lon": [abs(r.centroid.lon) for r in regs],
            "cloud_cover_mean": [r.cloud_cover_mean for r in regs],
        }
        covs = {k: np.array([np.nan if v is None else float(v) for v in vals]) for k, vals in covs.items()}
        summed = self.counts.sum(axis=2)
        counts = {(p, b): summed[i, j].astype(float) for i, p in enumerate(self.providers)
                  for j, b in enumerate(LABELS)}
        return RegionalTable([r.region_id for r in regs], [r.country_code for r in regs],
                             [r.continent for r in regs], covs, counts, self.months)

    def write_csv(self, path) -> None:
        self.table().write_csv(path)

    def write_long_csv(self, path) -> None:
        """region_id, provider, gsd_bin, year, count; nonzero cells plus unassigned rows."""
        ids = [r.region_id for r in self.regions]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["region_id", "provider", "gsd_bin", "year", "count"])
            for r, rid in enumerate(ids):
                for p, prov in enumerate(self.providers):
                    for b, label in enumerate(LABELS):
                        for y, year in enumerate(self.years):
                            c = int(self.counts[p, b, y, r])
                            if c:
                                w.writerow([rid, prov, label, year, c])
            for p, prov in enumerate(self.providers):
                for b, label in enumerate(LABELS):
                    for y, year in enumerate(self.years):
                        c = int(self.unassigned[p, b, y])
                        if c:
                            w.writerow([UNASSIGNED, prov, label, year, c])


def build_regional_dataset(store, regions, years=(2017, 2023), index: RegionIndex | None = None,
                           aggregate_bin: str = DEFAULT_AGGREGATE_BIN) -> RegionalDataset:
    """Count scenes per (provider, GSD bin, year, region) over the inclusive ``years`` span.

    Pre-aggregated rows in the store join by their ``bucket`` (a region id)
    and ``period`` (``YYYY`` or ``YYYY-MM``); rows without a ``gsd_bin``
    fall into ``aggregate_bin``.
    """
    y0, y1 = int(years[0]), int(years[-1])
    if y1 < y0:
        raise ValueError("years must be ascending")
    year_list = tuple(range(y0, y1 + 1))
    index = index or RegionIndex(regions)
    regs = index.regions
    cols = store.columns(years=set(year_list))
    aggs = [a for a in store.iter_aggregates() if y0 <= int(str(a["period"])[:4]) <= y1]
    providers = tuple(sorted(set(cols["provider"].tolist()) | {a["provider"] for a in aggs}))
    P, B, Y, R = len(providers), len(LABELS), len(year_list), len(regs)

    flat = np.zeros(P * B * Y * (R + 1), dtype=np.int64)
    totals = np.zeros(P * B * Y, dtype=np.int64)
    if len(cols["provider"]):
        p_idx = np.searchsorted(np.array(providers, dtype=object), cols["provider"])
        b_idx = gsd_codes(cols["gsd_m"])
        yr = cols["acquired_at"].astype("datetime64[Y]").astype(int) + 1970
        y_idx = yr - y0
        r_idx = index.assign(cols["lon"], cols["lat"]) + 1      # 0 = unassigned
        cell = (p_idx * B + b_idx) * Y + y_idx
        totals += np.bincount(cell, minlength=len(totals))
        flat += np.bincount(cell * (R + 1) + r_idx, minlength=len(flat))
    if aggs:
        pos = {rid: k + 1 for k, rid in enumerate(index.ids)}
        for a in aggs:
            label = a.get("gsd_bin") or aggregate_bin
            cell = (providers.index(a["provider"]) * B + LABELS.index(label)) * Y + int(str(a["period"])[:4]) - y0
            totals[cell] += int(a["count"])
            flat[cell * (R + 1) + pos.get(str(a["bucket"]), 0)] += int(a["count"])
    cube = flat.reshape(P, B, Y, R + 1)
    flags = {r.region_id: list(r.flags) for r in regs if r.flags}
    if any(not r.complete for r in regs):
        warnings.warn("some regions lack covariates; they are kept but excluded from regressions",
                      MissingCovariateWarning, stacklevel=2)
    return RegionalDataset(list(regs), providers, year_list, cube[..., 1:].copy(), cube[..., 0].copy(),
                           totals.reshape(P, B, Y), flags)

