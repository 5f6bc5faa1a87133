"""Deterministic synthetic inputs: a regional table shaped like the real one and a toy world."""
from __future__ import annotations

import csv
import itertools
import json
from pathlib import Path

import numpy as np

from .enrichment.dataset import COVARIATE_COLUMNS, RegionalTable

N_REGIONS = 1726
N_COUNTRIES = 179
CONTINENTS = ("Africa", "America", "Asia-Pacific", "Europe", "Middle East", "Oceania")
PROVIDER_BINS = {"maxar": ("0-0.5", "0.5-1.0"), "up42": ("0.5-1.0", "1.0-3.0"), "planet": (">3.0",)}
MONTHS = 84


def _country_codes(n: int) -> list[str]:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return ["".join(t) for t in itertools.islice(itertools.product("QXZ", letters, letters), n)]


def synthetic_regional_table(n_regions: int = N_REGIONS, n_countries: int = N_COUNTRIES,
                             seed: int = 1726) -> RegionalTable:
    """Regions nested in countries with plausible covariates and Poisson image counts."""
    rng = np.random.default_rng(seed)
    codes = _country_codes(n_countries)
    weights = rng.dirichlet(np.full(n_countries, 2.0))
    sizes = 1 + rng.multinomial(n_regions - n_countries, weights)
    country = np.repeat(np.arange(n_countries), sizes)

    c_dev = rng.beta(4, 2.5, n_countries)
    c_lat = rng.uniform(0, 62, n_countries)
    c_lon = rng.uniform(0, 178, n_countries)
    c_cloud = rng.uniform(0.2, 0.75, n_countries)
    c_effect = rng.lognormal(0.0, 0.5, n_countries)

    shdi = np.clip(c_dev[country] + rng.normal(0, 0.04, n_regions), 0.25, 0.97)
    income = np.clip(0.9 * shdi + rng.normal(0, 0.05, n_regions), 0.2, 1.0)
    households = np.round(rng.lognormal(12.3, 1.1, n_regions))
    area = np.round(rng.lognormal(10.2, 1.4, n_regions), 1)
    abs_lat = np.clip(c_lat[country] + rng.normal(0, 3, n_regions), 0, 75)
    abs_lon = np.clip(c_lon[country] + rng.normal(0, 3, n_regions), 0, 180)
    cloud = np.clip(c_cloud[country] + rng.normal(0, 0.05, n_regions), 0.02, 0.98)

    base = (area / 2e3) * (1 + 0.4 * shdi + 0.2 * abs_lat / 60 + 0.1 * abs_lon / 180 + 0.05 * cloud)
    base = base + households / 4e4
    counts = {}
    for provider, bins in PROVIDER_BINS.items():
        scale = 25.0 if provider == "planet" else 1.0
        for b in bins:
            lam = MONTHS * scale * base * c_effect[country] * rng.uniform(0.3, 0.7)
            counts[(provider, b)] = rng.poisson(lam).astype(float)

    region_ids = []
    per_country = {}
    for c in country:
        per_country[c] = per_country.get(c, 0) + 1
        region_ids.append(f"{codes[c]}r{100 + per_country[c]}")
    covs = {"shdi": np.round(shdi, 3), "income_index": np.round(income, 3), "households": households,
            "area_km2": area, "abs_lat": np.round(abs_lat, 4), "abs_lon": np.round(abs_lon, 4),
            "cloud_cover_mean": np.round(cloud, 4)}
    assert set(covs) == set(COVARIATE_COLUMNS)
    continent = [CONTINENTS[int(c) % len(CONTINENTS)] for c in country]
    return RegionalTable(region_ids, [codes[c] for c in country], continent, covs, counts, MONTHS)


# -- toy world for pipeline runs ---------------------------------------------

def _rect(lon0, lat0, lon1, lat1):
    return [[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]


def write_world_fixture(directory, seed: int = 7) -> dict[str, Path]:
    """Rectangular regions on a 20 x 15 degree lattice (some left as ocean), covariates and continents."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    feats, rows = [], []
    k = 0
    for j, lat0 in enumerate(range(-60, 75, 15)):
        for i, lon0 in enumerate(range(-180, 180, 20)):
            if rng.uniform() < 0.3:
                continue
            k += 1
            rid = f"R{k:03d}"
            rings = [_rect(lon0, lat0, lon0 + 20, lat0 + 15)]
            if rng.uniform() < 0.15:
                rings.append(_rect(lon0 + 8, lat0 + 6, lon0 + 12, lat0 + 9))
            feats.append({"type": "Feature", "properties": {"region_id": rid, "name": f"Region {k}"},
                          "geometry": {"type": "Polygon", "coordinates": rings}})
            rows.append({"region_id": rid, "country_code": f"C{(i // 3) + 6 * (j // 3):02d}",
                         "shdi": round(float(rng.uniform(0.35, 0.95)), 3),
                         "income_index": round(float(rng.uniform(0.3, 0.95)), 3),
                         "households": int(rng.integers(5_000, 3_000_000)),
                         "area_km2": "",
                         "cloud_cover_mean": round(float(rng.uniform(0.1, 0.8)), 3)})
    paths = {"boundaries": directory / "regions.geojson", "covariates": directory / "covariates.csv",
             "continents": directory / "continents.geojson"}
    paths["boundaries"].write_text(json.dumps({"type": "FeatureCollection", "features": feats}, indent=1),
                                   encoding="utf-8")
    with open(paths["covariates"], "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\r\n")
        w.writeheader()
        w.writerows(rows)
    conts = [("America", -180, -60, -30, 90), ("Africa", -30, -60, 60, 35), ("Europe", -30, 35, 60, 90),
             ("Asia-Pacific", 60, -60, 180, 90)]
    cfeats = [{"type": "Feature", "properties": {"region_id": name},
               "geometry": {"type": "Polygon", "coordinates": [_rect(a, b, c, d)]}} for name, a, b, c, d in conts]
    paths["continents"].write_text(json.dumps({"type": "FeatureCollection", "features": cfeats}, indent=1),
                                   encoding="utf-8")
    return paths
