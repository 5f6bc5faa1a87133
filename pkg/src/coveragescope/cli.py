"""coveragescope command line.

Exit codes: 0 success, 2 usage, 3 configuration, 4 missing upstream
output, 5 data or schema problem, 6 orbit propagation, 7 network.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import sys
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ToolkitConfig, load_config, require_paths
from .errors import (ConfigError, CoverageScopeError, HttpError, MissingUpstream, PropagationError)
from .manifest import read_manifest, write_manifest

EXIT_CONFIG, EXIT_UPSTREAM, EXIT_DATA, EXIT_PROPAGATION, EXIT_NETWORK = 3, 4, 5, 6, 7

log = logging.getLogger("coveragescope")
log.addHandler(logging.NullHandler())


class _NdjsonFormatter(logging.Formatter):
    def format(self, record):
        doc = {"ts": datetime.fromtimestamp(record.created, timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
               "level": record.levelname.lower(), "logger": record.name, "event": record.getMessage()}
        doc.update(getattr(record, "fields", {}))
        return json.dumps(doc, default=str)


def _setup_logging(out: Path) -> None:
    (out / "logs").mkdir(parents=True, exist_ok=True)
    root = logging.getLogger("coveragescope")
    for h in list(root.handlers):
        root.removeHandler(h)
        h.close()
    handler = logging.FileHandler(out / "logs" / "events.ndjson", encoding="utf-8")
    handler.setFormatter(_NdjsonFormatter())
    root.addHandler(handler)
    root.setLevel(logging.INFO)
    logging.captureWarnings(True)
    logging.getLogger("py.warnings").addHandler(handler)


def event(what: str, **fields) -> None:
    log.info(what, extra={"fields": fields})


@dataclass
class Run:
    config: ToolkitConfig | None
    out: Path
    jobs: int
    seed: int

    def cfg(self) -> ToolkitConfig:
        if self.config is None:
            raise ConfigError("this command needs --config")
        return self.config

    def stage(self, name: str) -> Path:
        d = self.out / name
        d.mkdir(parents=True, exist_ok=True)
        return d


pass_run = click.make_pass_decorator(Run)


@click.group()
@click.version_option(__version__, prog_name="coveragescope")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run configuration.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory (overrides config).")
@click.option("--jobs", default=1, show_default=True, type=click.IntRange(1, 256), help="Worker cap.")
@click.option("--seed", default=None, type=int, help="Random seed (overrides config).")
@click.pass_context
def cli(ctx, config_path, out_dir, jobs, seed):
    """Satellite coverage and imagery-availability toolkit."""
    if ctx.resilient_parsing:
        return
    cfg = load_config(config_path) if config_path else None
    out = Path(out_dir) if out_dir else (cfg.output_dir if cfg else Path("out"))
    out.mkdir(parents=True, exist_ok=True)
    _setup_logging(out)
    ctx.obj = Run(cfg, out, jobs, seed if seed is not None else (cfg.seed if cfg else 0))
    event("start", command=ctx.invoked_subcommand, version=__version__)


# -- revisit -----------------------------------------------------------------

def _load_tles(paths):
    from .tle import load_tle_file
    records = {}
    for p in paths:
        recs, report = load_tle_file(p)
        for f in report.failures:
            event("tle entry rejected", file=str(p), line=f.line_no, error=str(f.error))
        for r in recs:
            records.setdefault(r.norad_id, r)
    if not records:
        raise ConfigError("no usable TLE records in the configured files")
    return records


@cli.command()
@pass_run
def revisit(run: Run):
    """Simulate ground tracks and count revisits per grid tile."""
    from .coverage import (build_grid, count_point_passes, latitude_profile, revisit_geojson, write_pass_events,
                           write_profile_csv, write_revisit_csv, RevisitMap)
    from .enrichment.gsd import gsd_bin
    from .propagator import ground_track

    cfg = run.cfg()
    if cfg.window is None:
        raise ConfigError("config lacks window")
    require_paths(*[("tle file", p) for p in cfg.tle_files])
    records = _load_tles(cfg.tle_files)
    groups = [(c.name, c.satellite_ids, c.swath_buffer_km, c.gsd_m) for c in cfg.constellations]
    if not groups:
        groups = [("all", sorted(records), cfg.buffer_km, None)]
    seen = set()
    for name, ids, _, _ in groups:
        missing = [i for i in ids if i not in records]
        if missing:
            raise ConfigError(f"constellation {name}: no TLE for {missing}")
        if seen & set(ids):
            raise ConfigError(f"satellites {sorted(seen & set(ids))} belong to more than one constellation")
        seen |= set(ids)

    grid = build_grid(cfg.grid_edge_km)
    lat, lon = grid.lat_center, grid.lon_center
    total = np.zeros(len(grid), dtype=np.int64)
    by_bin: dict[str, np.ndarray] = {}
    events = []
    for name, ids, buffer_km, gsd in groups:
        tracks = [ground_track(records[i], cfg.window.start, cfg.window.end, cfg.step_seconds) for i in sorted(ids)]
        counts, ev = count_point_passes(tracks, lat, lon, None, buffer_km, cfg.gap_threshold_s)
        total += counts
        events.extend(ev)
        if gsd is not None:
            label = gsd_bin(gsd).value
            by_bin[label] = by_bin.get(label, np.zeros(len(grid), dtype=np.int64)) + counts
        event("constellation counted", constellation=name, satellites=len(ids), passes=len(ev))
    events.sort(key=lambda e: (e.t_enter, e.norad_id, str(e.target_id)))
    rmap = RevisitMap(grid, total, (cfg.window.start, cfg.window.end), sorted(seen))

    d = run.stage("revisit")
    outputs = [d / "revisit_map.csv", d / "revisit_map.geojson", d / "latitude_profile.csv",
               d / "pass_events.ndjson", d / "revisit_by_bin.csv"]
    write_revisit_csv(rmap, outputs[0])
    outputs[1].write_text(json.dumps(revisit_geojson(rmap), separators=(",", ":")), encoding="utf-8")
    write_profile_csv(latitude_profile(rmap), outputs[2])
    write_pass_events(events, outputs[3])
    with open(outputs[4], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["tile_id", "gsd_bin", "count"])
        for label in sorted(by_bin):
            for i, c in enumerate(by_bin[label]):
                w.writerow([i, label, int(c)])
    days = (cfg.window.end - cfg.window.start).total_seconds() / 86400.0
    params = {"grid_edge_km": cfg.grid_edge_km, "buffer_km": cfg.buffer_km, "step_seconds": cfg.step_seconds,
              "gap_threshold_s": cfg.gap_threshold_s, "window": [cfg.window.start.isoformat(),
                                                                 cfg.window.end.isoformat()],
              "window_days": days, "constellations": [[n, list(i), b, g] for n, i, b, g in groups],
              "tle_epochs": {str(i): records[i].epoch.isoformat() for i in sorted(seen)}}
    write_manifest(d, "revisit", params, cfg.tle_files, outputs)
    click.echo(f"revisit: {len(grid)} tiles, {len(events)} passes -> {d}")


# -- harvest -----------------------------------------------------------------

@cli.command()
@click.option("--max-pages", type=click.IntRange(1), default=None, help="Stop each job after N pages (resumable).")
@pass_run
def harvest(run: Run, max_pages):
    """Page through configured STAC catalogs into the scene store."""
    from .stac.harvester import HarvestJob, RetryPolicy, harvest_many, ingest_aggregate_counts
    from .stac.store import SceneStore

    cfg = run.cfg()
    if not cfg.stac and not cfg.aggregate_tables:
        raise ConfigError("config lists no stac sources or aggregate tables")
    store = SceneStore(run.out / "store")
    jobs = [HarvestJob(s.endpoint, s.collections, s.bbox, (s.time_range.start, s.time_range.end),
                       page_size=s.page_size, provider=s.provider, method=s.method, token_env=s.token_env,
                       nominal_gsd=cfg.nominal_gsd) for s in cfg.stac]
    policy = RetryPolicy(max_attempts=cfg.max_retries)
    workers = min(run.jobs, cfg.max_concurrency) if run.jobs > 1 else 1
    summaries = []
    if jobs:
        if max_pages is None:
            summaries = harvest_many(jobs, store, workers=workers, rate_limit=cfg.rate_limit, policy=policy)
        else:
            from .stac.harvester import harvest as harvest_one
            summaries = [harvest_one(j, store, policy=policy, rate_limit=cfg.rate_limit, max_pages=max_pages)
                         for j in jobs]
    aggregates = 0
    for table in cfg.aggregate_tables:
        require_paths(("aggregate table", table.path))
        aggregates += ingest_aggregate_counts(table.path, store, table.provider)
    for s in summaries:
        event("harvest job", provider=s.provider, fingerprint=s.fingerprint, pages=s.pages,
              added=s.records_added, rejected=len(s.errors), done=s.done, resumed=s.resumed)

    d = run.stage("harvest")
    summary_path = d / "summary.json"
    doc = {"record_count": len(store), "aggregate_rows_added": aggregates,
           "jobs": [{"provider": s.provider, "fingerprint": s.fingerprint, "done": s.done,
                     "rejected": [{"item_id": e.item_id, "error": str(e)} for e in s.errors]} for s in summaries]}
    summary_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    canonical = d / "store_canonical.ndjson"
    canonical.write_bytes(store.canonical_bytes())
    write_manifest(d, "harvest", {"sources": [s.model_dump(mode="json") for s in cfg.stac],
                                  "max_pages": max_pages}, [], [summary_path, canonical],
                   extra={"complete": all(s.done for s in summaries)})
    click.echo(f"harvest: {len(store)} records in store; complete={all(s.done for s in summaries)}")


# -- enrich ------------------------------------------------------------------

def _store_for(run: Run):
    from .stac.store import SceneStore
    read_manifest(run.out / "harvest", "harvest", "run `coveragescope harvest` first")
    return SceneStore(run.out / "store")


@cli.command()
@click.option("--fetch-cloud/--no-fetch-cloud", default=False, help="Fill missing cloud cover from the archive.")
@pass_run
def enrich(run: Run, fetch_cloud):
    """Assign scenes to regions and build the regional dataset."""
    from .enrichment.cloud import fetch_cloud_cover
    from .enrichment.dataset import build_regional_dataset
    from .enrichment.regions import load_regions

    cfg = run.cfg()
    require_paths(("boundaries", cfg.boundaries), ("covariates", cfg.covariates))
    store = _store_for(run)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        regions = load_regions(cfg.boundaries, cfg.covariates, cfg.region_id_property)
        if fetch_cloud:
            if not cfg.cloud_endpoint:
                raise ConfigError("--fetch-cloud needs cloud_endpoint in the config")
            for r in regions:
                if r.cloud_cover_mean is None:
                    r.cloud_cover_mean = fetch_cloud_cover(r.centroid.lat, r.centroid.lon, cfg.cloud_year,
                                                           endpoint=cfg.cloud_endpoint)
        ds = build_regional_dataset(store, regions, cfg.years)
    for w in caught:
        event("warning", category=w.category.__name__, detail=str(w.message))
    if not ds.partition_holds():
        raise CoverageScopeError("assigned plus unassigned counts do not add up to the store total")

    d = run.stage("enrich")
    wide, long_, summary = d / "regional_dataset.csv", d / "regional_counts_long.csv", d / "summary.json"
    ds.write_csv(wide)
    ds.write_long_csv(long_)
    doc = {"n_regions": ds.n_regions, "years": list(ds.years), "months": ds.months,
           "providers": list(ds.providers), "assigned": int(ds.counts.sum()),
           "unassigned": int(ds.unassigned.sum()), "total": int(ds.totals.sum()),
           "flagged_regions": {k: v for k, v in sorted(ds.flags.items())}}
    summary.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(d, "enrich", {"years": list(cfg.years), "region_id_property": cfg.region_id_property},
                   [cfg.boundaries, cfg.covariates, run.out / "harvest" / "store_canonical.ndjson"],
                   [wide, long_, summary], root=run.out)
    click.echo(f"enrich: {ds.n_regions} regions, {doc['assigned']} assigned, {doc['unassigned']} unassigned")


# -- analysis ----------------------------------------------------------------

BUNDLED = "bundled"


def _regional_table(run: Run, dataset):
    from .enrichment.dataset import read_regional_table
    if dataset == BUNDLED:
        ref = resources.files("coveragescope") / "data" / "synthetic_regional_dataset.csv"
        with resources.as_file(ref) as p:
            return read_regional_table(p), Path(p)
    if dataset:
        if not Path(dataset).exists():
            raise ConfigError(f"dataset {dataset} does not exist")
        return read_regional_table(dataset), Path(dataset)
    read_manifest(run.out / "enrich", "enrich", "run `coveragescope enrich` first or pass --dataset")
    path = run.out / "enrich" / "regional_dataset.csv"
    return read_regional_table(path), path


def _planet(run: Run):
    return tuple(run.config.planet_providers) if run.config else ("planet",)


@cli.command()
@click.option("--variant", type=click.Choice(["main", "all-providers", "planet-only", "fixed-effects",
                                              "income-index", "vhr-only"]), default="main", show_default=True)
@click.option("--model", "models", type=click.IntRange(1, 4), multiple=True, help="Ladder column(s); default all.")
@click.option("--dataset", default=None, help=f"Regional dataset CSV, or '{BUNDLED}' for the synthetic one.")
@click.option("--robust", is_flag=True, help="HC1 standard errors instead of classical ones.")
@click.option("--forest/--no-forest", default=False, help="Also fit the random forest on the full model.")
@click.option("--trees", default=200, show_default=True, type=click.IntRange(1))
@pass_run
def regress(run: Run, variant, models, dataset, robust, forest, trees):
    """OLS model ladder (and optionally a random forest) on the regional dataset."""
    from .stats.report import (VARIANTS, fit_forest, fit_ladder, layout_markdown, write_coefficients,
                               write_layout_csv, write_summary)

    table, src = _regional_table(run, dataset)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fits = fit_ladder(table, variant, _planet(run), robust=robust)
    for w in caught:
        event("warning", category=w.category.__name__, detail=str(w.message))
    if models:
        fits = [fits[k - 1] for k in sorted(set(models))]
    v = VARIANTS[variant]
    d = run.stage(f"regress/{variant}")
    outputs = [d / "coefficients.csv", d / "summary.csv", d / "table.csv", d / "table.md", d / "predictions.csv"]
    write_coefficients(fits, outputs[0])
    write_summary(fits, outputs[1])
    write_layout_csv(fits, outputs[2], v)
    outputs[3].write_text(layout_markdown(fits, v), encoding="utf-8")
    last = fits[-1]
    with open(outputs[4], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["row", "actual", "fitted"])
        for i, (a, f) in enumerate(zip(last.fitted + last.residuals, last.fitted)):
            w.writerow([i, repr(float(a)), repr(float(f))])
    params = {"variant": variant, "models": [f.meta["model"] for f in fits], "robust": robust,
              "planet_providers": list(_planet(run))}
    if forest:
        design, model, imp = fit_forest(table, variant, _planet(run), seed=run.seed, n_jobs=run.jobs,
                                        n_trees=trees)
        imp.write_csv(d / "importance.csv")
        with open(d / "forest_predictions.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["row", "actual", "predicted"])
            for i, (a, p) in enumerate(zip(design.y, model.predict(design.X))):
                w.writerow([i, repr(float(a)), repr(float(p))])
        outputs += [d / "importance.csv", d / "forest_predictions.csv"]
        params["forest"] = model.hyperparameters() | {"degenerate": imp.degenerate}
    write_manifest(d, "regress", params, [src], outputs, root=run.out)
    click.echo(f"regress[{variant}]: " + ", ".join(f"({f.meta['model']}) R2={f.r2:.3f}" for f in fits))


@cli.command()
@click.option("--variant", type=click.Choice(["main", "all-providers", "planet-only", "vhr-only"]), default="main",
              show_default=True, help="Which images count towards the per-area value.")
@click.option("--rank-by", type=click.Choice(["shdi", "income_index", "value"]), default="shdi", show_default=True)
@click.option("--dataset", default=None, help=f"Regional dataset CSV, or '{BUNDLED}'.")
@pass_run
def gini(run: Run, variant, rank_by, dataset):
    """Lorenz curve and Gini index of images per km2."""
    from .stats.gini import gini_by_rank
    from .stats.report import VARIANTS, dependent_counts

    table, src = _regional_table(run, dataset)
    counts = dependent_counts(table, VARIANTS[variant], _planet(run))
    area = table.covariates["area_km2"]
    keep = np.isfinite(area) & (area > 0)
    if rank_by != "value":
        keep &= np.isfinite(table.covariates[rank_by])
    values = counts[keep] / area[keep]
    key = None if rank_by == "value" else table.covariates[rank_by][keep]
    ids = [r for r, k in zip(table.region_id, keep) if k]
    res = gini_by_rank(values, key, ids)
    d = run.stage("gini")
    lorenz, summary = d / "lorenz.csv", d / "gini.json"
    res.write_csv(lorenz)
    doc = res.summary() | {"variant": variant, "rank_by": rank_by}
    summary.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(d, "gini", {"variant": variant, "rank_by": rank_by}, [src], [lorenz, summary], root=run.out)
    click.echo(f"gini[{rank_by}]: {res.gini:.6f} (classical {res.classical_gini:.6f})")


@cli.command()
@pass_run
def ratio(run: Run):
    """Historic images against potential revisits per continent and GSD bin."""
    from .coverage import build_grid
    from .enrichment.gsd import LABELS, gsd_codes
    from .enrichment.ratio import ratio_table, write_ratio_csv
    from .enrichment.regions import Region, RegionIndex, load_boundaries

    cfg = run.cfg()
    require_paths(("continents", cfg.continents))
    rev = read_manifest(run.out / "revisit", "revisit", "run `coveragescope revisit` first")
    store = _store_for(run)
    grid = build_grid(rev["parameters"]["grid_edge_km"])
    days = rev["parameters"]["window_days"]
    revisits: dict[str, np.ndarray] = {}
    with open(run.out / "revisit" / "revisit_by_bin.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            revisits.setdefault(row["gsd_bin"], np.zeros(len(grid)))[int(row["tile_id"])] = float(row["count"])
    if not revisits:
        raise ConfigError("ratio needs constellations with gsd_m in the revisit configuration")

    shapes = load_boundaries(cfg.continents, cfg.region_id_property)
    index = RegionIndex([Region(k, polys, area_km2=1.0) for k, (polys, _) in shapes.items()])
    tile_group = index.assign(grid.lon_center, grid.lat_center)

    y0, y1 = cfg.years
    hist_days = (datetime(y1 + 1, 1, 1) - datetime(y0, 1, 1)).days
    cols = store.columns(years=set(range(y0, y1 + 1)))
    tiles = grid.locate(cols["lat"], cols["lon"])
    bins = gsd_codes(cols["gsd_m"]) if len(tiles) else np.zeros(0, dtype=int)
    historic_counts = np.zeros((len(LABELS), len(grid)))
    np.add.at(historic_counts, (bins, tiles), 1.0)

    hist, rev_units = {}, {}
    for g, group in enumerate(index.ids):
        members = tile_group == g
        if not members.any():
            continue
        for label in sorted(revisits):
            b = LABELS.index(label)
            hist[(group, label)] = historic_counts[b, members] / hist_days
            rev_units[(group, label)] = revisits[label][members] / days
    rows = ratio_table(rev_units, hist)
    d = run.stage("ratio")
    out = d / "ratio_table.csv"
    write_ratio_csv(rows, out)
    write_manifest(d, "ratio", {"years": list(cfg.years), "window_days": days},
                   [cfg.continents, run.out / "revisit" / "revisit_by_bin.csv",
                    run.out / "harvest" / "store_canonical.ndjson"], [out], root=run.out)
    click.echo(f"ratio: {len(rows)} rows -> {out}")


def _parse_bbox(text):
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise click.BadParameter("bbox must be four comma-separated numbers") from None
    if len(parts) != 4:
        raise click.BadParameter("bbox must be four comma-separated numbers")
    return parts


def _parse_time(text):
    t = datetime.fromisoformat(text.replace("Z", "+00:00"))
    return t if t.tzinfo else t.replace(tzinfo=timezone.utc)


@cli.command()
@click.option("--name", default=None, help="Query name (a configured heatmap, or a label for ad-hoc flags).")
@click.option("--bbox", default=None, help="lon_min,lat_min,lon_max,lat_max")
@click.option("--cell-size", type=float, default=None, help="Cell edge in degrees.")
@click.option("--bucket", type=click.Choice(["month", "year"]), default=None)
@click.option("--start", default=None, help="Window start (RFC 3339).")
@click.option("--end", default=None, help="Window end, exclusive (RFC 3339).")
@pass_run
def heatmap(run: Run, name, bbox, cell_size, bucket, start, end):
    """Scene-centroid counts per cell and calendar bucket."""
    from .enrichment.heatmap import heatmap as make_heatmap

    queries = []
    if bbox:
        if not (cell_size and start and end):
            raise click.UsageError("--bbox needs --cell-size, --start and --end")
        queries.append((name or "adhoc", _parse_bbox(bbox), cell_size, bucket or "month",
                        (_parse_time(start), _parse_time(end))))
    elif run.config and run.config.heatmaps:
        for q in run.config.heatmaps:
            if name is None or q.name == name:
                queries.append((q.name, q.bbox, q.cell_size_deg, q.bucket, (q.window.start, q.window.end)))
    if not queries:
        raise ConfigError("no heatmap query: pass --bbox/--cell-size/--start/--end or configure heatmaps")
    store = _store_for(run)
    for qname, qbbox, qcell, qbucket, window in queries:
        cube = make_heatmap(store, qbbox, qcell, qbucket, window)
        d = run.stage(f"heatmap/{qname}")
        csv_path, geo_path = d / "heatmap.csv", d / "heatmap.geojson"
        cube.write_csv(csv_path)
        geo_path.write_text(json.dumps(cube.geojson(), separators=(",", ":")), encoding="utf-8")
        write_manifest(d, "heatmap", {"bbox": list(qbbox), "cell_size_deg": qcell, "bucket": qbucket,
                                      "window": [window[0].isoformat(), window[1].isoformat()]},
                       [run.out / "harvest" / "store_canonical.ndjson"], [csv_path, geo_path], root=run.out)
        click.echo(f"heatmap[{qname}]: {int(cube.counts.sum())} scenes in {len(cube.buckets)} buckets")


@cli.command()
@pass_run
def report(run: Run):
    """Collect the stage outputs into one markdown summary."""
    out = run.out
    lines = [f"# coveragescope report ({__version__})", ""]
    prof = out / "revisit" / "latitude_profile.csv"
    if prof.exists():
        with open(prof, newline="", encoding="utf-8") as fh:
            rows = [(float(r["lat_band_center"]), float(r["mean_count"])) for r in csv.DictReader(fh)]
        eq = min(rows, key=lambda r: abs(r[0]))
        lines += ["## Revisits", "", f"- equatorial band mean: {eq[1]:.2f}",
                  f"- maximum band mean: {max(r[1] for r in rows):.2f}", ""]
    summary = out / "enrich" / "summary.json"
    if summary.exists():
        doc = json.loads(summary.read_text())
        lines += ["## Regional dataset", "", f"- regions: {doc['n_regions']}",
                  f"- assigned scenes: {doc['assigned']}, unassigned: {doc['unassigned']}", ""]
    for md in sorted((out / "regress").glob("*/table.md")) if (out / "regress").exists() else []:
        lines += [f"## Regression ({md.parent.name})", "", md.read_text(encoding="utf-8"), ""]
    g = out / "gini" / "gini.json"
    if g.exists():
        doc = json.loads(g.read_text())
        lines += ["## Concentration", "", f"- Gini ({doc['rank_by']}-ranked): {doc['gini']:.3f}",
                  f"- classical Gini: {doc['classical_gini']:.3f}",
                  f"- value share of the lowest 90% of regions: {doc['value_share_at_0.9']:.3f}",
                  f"- value share of the lowest 40% of regions: {doc['value_share_at_0.4']:.3f}", ""]
    r = out / "ratio" / "ratio_table.csv"
    if r.exists():
        lines += ["## Historic images per revisit", "", "```", r.read_text(encoding="utf-8").strip(), "```", ""]
    d = run.stage("report")
    path = d / "report.md"
    path.write_text("\n".join(lines), encoding="utf-8")
    write_manifest(d, "report", {}, [], [path])
    click.echo(f"report -> {path}")


# -- fixtures and the mock catalog ---------------------------------------------

@cli.command("mock-stac")
@click.option("--pages", type=click.Path(file_okay=False), required=True, help="Directory of canned pages.")
@click.option("--write-fixtures", is_flag=True, help="Generate pages into --pages before serving.")
@click.option("--n-pages", default=5, show_default=True, type=click.IntRange(1))
@click.option("--per-page", default=200, show_default=True, type=click.IntRange(1))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--no-serve", is_flag=True, help="Only write fixtures.")
@pass_run
def mock_stac(run: Run, pages, write_fixtures, n_pages, per_page, host, port, no_serve):
    """Serve canned STAC search pages for offline runs and tests."""
    from .stac.mockserver import create_mock_app, write_fixture_pages
    if write_fixtures:
        write_fixture_pages(pages, n_pages, per_page, seed=run.seed)
    if no_serve:
        return
    try:
        import uvicorn
    except ImportError:
        raise ConfigError("serving needs uvicorn: pip install 'artifact[serve]'") from None
    uvicorn.run(create_mock_app(pages), host=host, port=port, log_level="warning")


@cli.command()
@click.argument("directory", type=click.Path(file_okay=False))
@click.option("--endpoint", default="http://127.0.0.1:8765/search", show_default=True,
              help="Search URL the generated config points at.")
@pass_run
def fixtures(run: Run, directory, endpoint):
    """Write a toy world, canned catalog pages and a matching config."""
    from .stac.mockserver import write_fixture_pages
    from .synthetic import write_world_fixture

    d = Path(directory)
    paths = write_world_fixture(d, seed=run.seed + 7)
    write_fixture_pages(d / "pages", 5, 200, seed=run.seed)
    ref = resources.files("coveragescope") / "data" / "skysat_representative.tle"
    (d / "skysat.tle").write_text(ref.read_text(encoding="utf-8"), encoding="utf-8")
    cfg = {
        "tle_files": ["skysat.tle"],
        "constellations": [{"name": "SkySat", "satellite_ids": [99019], "swath_buffer_km": 250, "gsd_m": 0.5}],
        "window": {"start": "2024-01-29T00:00:00Z", "end": "2024-01-31T00:00:00Z"},
        "stac": [{"provider": "maxar", "endpoint": endpoint,
                  "time_range": {"start": "2017-01-01T00:00:00Z", "end": "2024-01-01T00:00:00Z"}}],
        "boundaries": paths["boundaries"].name, "covariates": paths["covariates"].name,
        "continents": paths["continents"].name,
        "heatmaps": [{"name": "sample", "bbox": [-20, -40, 60, 40], "cell_size_deg": 10, "bucket": "year",
                      "window": {"start": "2017-01-01T00:00:00Z", "end": "2024-01-01T00:00:00Z"}}],
        "output_dir": "out", "seed": run.seed,
    }
    (d / "config.json").write_text(json.dumps(cfg, indent=2) + "\n", encoding="utf-8")
    click.echo(f"fixtures -> {d}")


# -- entry point ---------------------------------------------------------------

def exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, MissingUpstream):
        return EXIT_UPSTREAM
    if isinstance(exc, PropagationError):
        return EXIT_PROPAGATION
    if isinstance(exc, HttpError):
        return EXIT_NETWORK
    return EXIT_DATA


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="coveragescope", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except (CoverageScopeError, ValueError, OSError) as exc:
        code = exit_code(exc) if isinstance(exc, CoverageScopeError) else EXIT_DATA
        log.error("failed", extra={"fields": {"error": type(exc).__name__, "detail": str(exc), "exit": code}})
        click.echo(f"error: {exc}", err=True)
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
