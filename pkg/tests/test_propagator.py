import math
import time
from datetime import timedelta

import numpy as np
import pytest
from sgp4.api import WGS72, Satrec
from skyfield.api import EarthSatellite, load, wgs84

from coveragescope.errors import PropagationError, PropagationWindowExceeded
from coveragescope.geo import haversine_km
from coveragescope.propagator import gmst, ground_track, propagate, track_geojson, write_track_ndjson
from coveragescope.sgp4 import NearEarthSgp4
from coveragescope.tle import parse_tle

DECAYING = ("1 22312U 93002D   06094.46235912  .99999999  81888-5  49949-3 0  3953",
            "2 22312  62.1486  77.4698 0308723 267.9229  88.7392 15.95744531 98783")


def reference_positions(l1, l2, minutes):
    sat = Satrec.twoline2rv(l1, l2, WGS72)
    out = [sat.sgp4_tsince(float(t)) for t in minutes]
    assert all(e == 0 for e, _, _ in out)
    return np.array([r for _, r, _ in out])


def test_positions_match_reference_sgp4(verification_lines):
    minutes = np.arange(0.0, 1441.0, 1.0)
    for l1, l2 in verification_lines:
        r, _, status = NearEarthSgp4(parse_tle([l1, l2])).propagate(minutes)
        assert (status == 0).all()
        err = np.linalg.norm(r - reference_positions(l1, l2, minutes), axis=1)
        assert math.sqrt(np.mean(err ** 2)) < 0.1
        assert err.max() < 1e-6


def test_velocity_matches_reference(verification_lines):
    l1, l2 = verification_lines[2]
    sat = Satrec.twoline2rv(l1, l2, WGS72)
    _, v, _ = NearEarthSgp4(parse_tle([l1, l2])).propagate(np.array([0.0, 360.0, 1440.0]))
    ref = np.array([sat.sgp4_tsince(t)[2] for t in (0.0, 360.0, 1440.0)])
    assert np.allclose(v, ref, atol=1e-9)


def test_satellite_day_is_fast(verification_records):
    rec = verification_records[1]
    t0 = time.perf_counter()
    ground_track(rec, rec.epoch, rec.epoch + timedelta(days=1), 1.0)
    assert time.perf_counter() - t0 < 1.0


def test_subpoints_match_skyfield(verification_records, verification_lines):
    ts = load.timescale(builtin=True)
    for rec, (l1, l2) in zip(verification_records, verification_lines):
        tr = ground_track(rec, rec.epoch, rec.epoch + timedelta(hours=6), 60)
        sat = EarthSatellite(l1, l2, ts=ts)
        pos = wgs84.geographic_position_of(sat.at(ts.from_datetimes(tr.times)))
        # the residual is the UT1-UTC offset, which this toolkit ignores
        assert haversine_km(tr.lat, tr.lon, pos.latitude.degrees, pos.longitude.degrees).max() < 0.2
        assert np.abs(tr.alt - pos.elevation.km).max() < 1e-6


def test_single_instant_agrees_with_track(verification_records):
    rec = verification_records[2]
    t = rec.epoch + timedelta(minutes=90)
    state = propagate(rec, t)
    tr = ground_track(rec, rec.epoch, t + timedelta(seconds=1), 60)
    r, _, _ = NearEarthSgp4(rec).propagate(np.array([90.0]))
    assert np.allclose(state.position, r[0])
    assert len(tr) == 91


def test_tracks_are_deterministic(verification_records):
    rec = verification_records[3]
    a = ground_track(rec, rec.epoch, rec.epoch + timedelta(hours=12), 60)
    b = ground_track(rec, rec.epoch, rec.epoch + timedelta(hours=12), 60)
    for f in ("lat", "lon", "alt"):
        assert getattr(a, f).tobytes() == getattr(b, f).tobytes()


def test_consecutive_samples_within_pass_gap_bound(verification_records):
    for rec in verification_records:
        tr = ground_track(rec, rec.epoch, rec.epoch + timedelta(days=1), 60)
        hop = haversine_km(tr.lat[:-1], tr.lon[:-1], tr.lat[1:], tr.lon[1:])
        assert hop.max() < 500.0


def _ascending_crossings(lat, lon):
    i = np.flatnonzero((lat[:-1] < 0) & (lat[1:] >= 0))
    f = -lat[i] / (lat[i + 1] - lat[i])
    dl = (lon[i + 1] - lon[i] + 180) % 360 - 180
    return lon[i] + f * dl


def test_equator_crossings_drift_west_like_the_oracle(verification_records, verification_lines):
    ts = load.timescale(builtin=True)
    for rec, (l1, l2) in zip(verification_records, verification_lines):
        tr = ground_track(rec, rec.epoch, rec.epoch + timedelta(days=1), 10)
        pos = wgs84.geographic_position_of(EarthSatellite(l1, l2, ts=ts).at(ts.from_datetimes(tr.times)))
        ours = np.diff(_ascending_crossings(tr.lat, tr.lon))
        theirs = np.diff(_ascending_crossings(pos.latitude.degrees, pos.longitude.degrees))
        ours, theirs = (ours + 180) % 360 - 180, (theirs + 180) % 360 - 180
        assert (ours < 0).all()
        assert np.abs(ours - theirs).max() < 1.0
        # earth rotation per orbit plus J2 nodal regression
        period = 1440.0 / rec.mean_motion
        a = (398600.8 / (rec.mean_motion * 2 * math.pi / 86400) ** 2) ** (1 / 3)
        p = a * (1 - rec.eccentricity ** 2)
        nodal = -1.5 * 1.082616e-3 * (6378.135 / p) ** 2 * math.cos(math.radians(rec.inclination)) * 360
        assert abs(ours.mean() - (-360 * period / 1436.068 + nodal)) < 1.0


def test_gmst_at_reference_epoch():
    assert math.degrees(gmst(2451545.0)) == pytest.approx(280.46061837, abs=1e-6)


def test_failing_orbit_status_matches_reference():
    minutes = np.arange(0.0, 1441.0, 1.0)
    _, _, status = NearEarthSgp4(parse_tle(DECAYING)).propagate(minutes)
    sat = Satrec.twoline2rv(*DECAYING, WGS72)
    ref = np.array([sat.sgp4_tsince(float(t))[0] for t in minutes])
    assert (status != 0).any()
    assert np.array_equal(status, ref)


def test_failing_orbit_raises_with_time():
    rec = parse_tle(DECAYING)
    with pytest.raises(PropagationError) as info:
        ground_track(rec, rec.epoch, rec.epoch + timedelta(days=1), 60)
    assert info.value.t is not None and info.value.t > rec.epoch


def test_window_far_from_epoch_rejected(verification_records):
    rec = verification_records[1]
    with pytest.raises(PropagationWindowExceeded):
        ground_track(rec, rec.epoch + timedelta(days=400), rec.epoch + timedelta(days=401), 60)


def test_bad_window_arguments(verification_records):
    rec = verification_records[1]
    with pytest.raises(ValueError):
        ground_track(rec, rec.epoch, rec.epoch, 60)
    with pytest.raises(ValueError):
        ground_track(rec, rec.epoch, rec.epoch + timedelta(hours=1), 0)


def test_track_exports(tmp_path, verification_records):
    rec = verification_records[2]
    tr = ground_track(rec, rec.epoch, rec.epoch + timedelta(minutes=30), 60)
    write_track_ndjson([tr], tmp_path / "t.ndjson")
    assert len((tmp_path / "t.ndjson").read_text().splitlines()) == 30
    doc = track_geojson([tr])
    assert doc["type"] == "FeatureCollection" and doc["features"]
