import math
from dataclasses import replace
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coveragescope.coverage import (build_grid, count_point_passes, count_revisits, in_swath, latitude_profile,
                                    region_revisits, revisit_geojson, write_pass_events, write_profile_csv,
                                    write_revisit_csv)
from coveragescope.errors import WindowMismatch
from coveragescope.geo import GeodeticPoint, haversine_km
from coveragescope.propagator import ground_track

from conftest import utc

START = utc(2006, 6, 26)


def random_satellites(base, rng, k):
    out = []
    for j in range(k):
        rec = replace(base, norad_id=90000 + j, raan=float(rng.uniform(0, 360)),
                      mean_anomaly=float(rng.uniform(0, 360)), inclination=float(rng.uniform(20, 110)),
                      mean_motion=float(rng.uniform(14.0, 16.0)), eccentricity=float(rng.uniform(0, 0.01)))
        out.append(rec)
    return out


def tracks_for(records, start=START, hours=24, step=60.0):
    return [ground_track(r, start, start + timedelta(hours=hours), step) for r in records]


def oracle_counts(tracks, lat, lon, buffer_km, gap):
    """Label every (point, sample) pair, then split each point's hit list into passes."""
    counts = np.zeros(len(lat), dtype=int)
    for tr in tracks:
        inside = haversine_km(lat[:, None], lon[:, None], tr.lat[None, :], tr.lon[None, :]) <= buffer_km
        for p in range(len(lat)):
            hits = np.flatnonzero(inside[p]).tolist()
            passes = 0
            prev = None
            for k in hits:
                if prev is None or (k - prev) * tr.step > gap:
                    passes += 1
                prev = k
            counts[p] += passes
    return counts


@pytest.fixture(scope="module")
def base_record(verification_records):
    return verification_records[2]


def test_counts_equal_label_then_segment_oracle(base_record):
    rng = np.random.default_rng(20)
    for _ in range(20):
        sats = random_satellites(base_record, rng, int(rng.integers(1, 4)))
        tracks = tracks_for(sats)
        lat = np.degrees(np.arcsin(rng.uniform(-1, 1, 50)))
        lon = rng.uniform(-180, 180, 50)
        buffer_km = float(rng.uniform(100, 900))
        gap = float(rng.choice([120.0, 300.0, 900.0]))
        counts, events = count_point_passes(tracks, lat, lon, None, buffer_km, gap)
        assert np.array_equal(counts, oracle_counts(tracks, lat, lon, buffer_km, gap))
        assert len(events) == counts.sum()


def test_grid_shape_at_500_km():
    g = build_grid(500)
    assert g.n_bands == 40 and len(g) == 2044
    areas = (np.sin(np.radians(g.lat_max)) - np.sin(np.radians(g.lat_min))) * np.radians(g.lon_max - g.lon_min)
    mid = np.abs(g.lat_center) < 60
    assert areas[mid].max() / areas[mid].min() < 1.2
    assert math.isclose(areas.sum(), 4 * math.pi, rel_tol=1e-12)


@given(lat=st.floats(-90, 90), lon=st.floats(-180, 180, exclude_max=True))
def test_locate_returns_the_containing_tile(lat, lon):
    g = GRID
    i = int(g.locate(lat, lon))
    assert g.lat_min[i] <= lat <= g.lat_max[i]
    assert g.lon_min[i] <= lon <= g.lon_max[i]


GRID = build_grid(500)


def test_tile_centres_locate_to_themselves():
    g = GRID
    assert np.array_equal(g.locate(g.lat_center, g.lon_center), np.arange(len(g)))


def test_in_swath_boundary():
    a = GeodeticPoint(0.0, 0.0)
    b = GeodeticPoint(0.0, 2.0)
    d = haversine_km(0, 0, 0, 2)
    assert in_swath(a, b, d) and not in_swath(a, b, d - 1e-6)


@pytest.fixture(scope="module")
def three_tracks(base_record):
    return tracks_for(random_satellites(base_record, np.random.default_rng(5), 3))


@given(b1=st.floats(50, 1500), b2=st.floats(50, 1500))
def test_larger_buffer_never_lowers_counts(three_tracks, b1, b2):
    lo, hi = sorted((b1, b2))
    small, _ = count_revisits(three_tracks, GRID, lo)
    large, _ = count_revisits(three_tracks, GRID, hi)
    assert (large.counts >= small.counts).all()


@given(split=st.integers(1, 2), buffer_km=st.floats(100, 800))
def test_counts_add_over_disjoint_satellite_sets(three_tracks, split, buffer_km):
    whole, _ = count_revisits(three_tracks, GRID, buffer_km)
    a, _ = count_revisits(three_tracks[:split], GRID, buffer_km)
    b, _ = count_revisits(three_tracks[split:], GRID, buffer_km)
    assert np.array_equal(whole.counts, a.counts + b.counts)


@given(cut=st.integers(1, 47))
def test_window_additivity_up_to_boundary_passes(base_record, cut):
    sats = random_satellites(base_record, np.random.default_rng(9), 2)
    mid = START + timedelta(minutes=30 * cut)
    end = START + timedelta(hours=24)
    full = [ground_track(r, START, end, 60) for r in sats]
    first = [ground_track(r, START, mid, 60) for r in sats]
    second = [ground_track(r, mid, end, 60) for r in sats]
    c, _ = count_revisits(full, GRID, 250)
    a, _ = count_revisits(first, GRID, 250)
    b, _ = count_revisits(second, GRID, 250)
    total = a.counts + b.counts
    assert (c.counts <= total).all() and (c.counts >= total - len(sats)).all()


def test_mismatched_windows_rejected(base_record):
    a = ground_track(base_record, START, START + timedelta(hours=1), 60)
    b = ground_track(base_record, START, START + timedelta(hours=2), 60)
    with pytest.raises(WindowMismatch):
        count_revisits([a, b], GRID)


def test_region_revisits_by_centroid(three_tracks):
    class R:
        def __init__(self, rid, lat, lon):
            self.region_id, self.centroid = rid, GeodeticPoint(lat, lon)
    regions = [R("a", 0.0, 0.0), R("b", 45.0, 90.0)]
    counts = region_revisits(three_tracks, regions)
    direct, _ = count_point_passes(three_tracks, [0.0, 45.0], [0.0, 90.0])
    assert counts == {"a": int(direct[0]), "b": int(direct[1])}


def test_profile_and_exports(tmp_path, three_tracks):
    rmap, events = count_revisits(three_tracks, GRID, 250)
    prof = latitude_profile(rmap)
    assert len(prof) == GRID.n_bands
    band_means = [rmap.counts[GRID.band == b].mean() for b in range(GRID.n_bands)]
    assert np.allclose([m for _, m in prof], band_means)
    write_revisit_csv(rmap, tmp_path / "m.csv")
    write_profile_csv(prof, tmp_path / "p.csv")
    write_pass_events(events, tmp_path / "e.ndjson")
    assert len((tmp_path / "m.csv").read_text().splitlines()) == len(GRID) + 1
    assert len((tmp_path / "e.ndjson").read_text().splitlines()) == int(rmap.counts.sum())
    assert len(revisit_geojson(rmap)["features"]) == len(GRID)
