import csv
import json
import shutil

import pytest

from coveragescope import __version__
from coveragescope.cli import main
from coveragescope.manifest import sha256_file

from conftest import LiveCatalog

STAGES = ["revisit", "harvest", "enrich", "regress", "gini", "ratio", "heatmap", "report"]


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    world = base / "world"
    assert run("--out", base / "scratch", "mock-stac", "--pages", world / "pages", "--write-fixtures",
               "--no-serve") == 0
    with LiveCatalog(world / "pages") as catalog:
        assert run("--out", base / "scratch", "fixtures", world, "--endpoint", catalog.endpoint) == 0
        cfg = world / "config.json"
        out = base / "out"
        codes = {stage: run("--config", cfg, "--out", out, stage) for stage in STAGES}
        yield {"config": cfg, "out": out, "codes": codes, "catalog": catalog, "world": world}


def test_every_stage_succeeds(pipeline):
    assert pipeline["codes"] == {s: 0 for s in STAGES}


def test_stage_outputs_exist(pipeline):
    out = pipeline["out"]
    for rel in ("revisit/revisit_map.csv", "revisit/revisit_map.geojson", "revisit/latitude_profile.csv",
                "revisit/pass_events.ndjson", "harvest/store_canonical.ndjson", "enrich/regional_dataset.csv",
                "regress/main/table.md", "regress/main/coefficients.csv", "gini/lorenz.csv", "gini/gini.json",
                "ratio/ratio_table.csv", "heatmap/sample/heatmap.csv", "heatmap/sample/heatmap.geojson",
                "report/report.md", "logs/events.ndjson"):
        assert (out / rel).is_file(), rel
    with open(out / "revisit" / "revisit_map.csv", newline="") as fh:
        assert sum(1 for _ in csv.DictReader(fh)) == 2044


def test_manifests_record_hashes(pipeline):
    out = pipeline["out"]
    where = {s: out / s for s in STAGES} | {"regress": out / "regress" / "main", "heatmap": out / "heatmap" / "sample"}
    for stage, d in where.items():
        doc = json.loads((d / "manifest.json").read_text())
        assert doc["command"] == stage and doc["toolkit_version"] == __version__
        assert doc["outputs"]
        for rel, digest in doc["outputs"].items():
            assert sha256_file(d / rel) == digest
    enrich = json.loads((out / "enrich" / "manifest.json").read_text())
    assert enrich["inputs"]["harvest/store_canonical.ndjson"] == sha256_file(
        out / "harvest" / "store_canonical.ndjson")
    revisit = json.loads((out / "revisit" / "manifest.json").read_text())
    assert revisit["inputs"] and all(len(v) == 64 for v in revisit["inputs"].values())
    assert revisit["parameters"]["tle_epochs"] == {"99019": "2024-01-29T11:15:00+00:00"}


def test_logs_are_ndjson(pipeline):
    lines = (pipeline["out"] / "logs" / "events.ndjson").read_text().splitlines()
    docs = [json.loads(x) for x in lines]
    assert {"ts", "level", "event"} <= set(docs[0])
    assert any(d["event"] == "harvest job" for d in docs)


def test_rerunning_a_stage_is_idempotent(pipeline):
    out = pipeline["out"]
    before = {p.name: p.read_bytes() for p in (out / "revisit").iterdir() if p.name != "manifest.json"}
    assert run("--config", pipeline["config"], "--out", out, "revisit") == 0
    after = {p.name: p.read_bytes() for p in (out / "revisit").iterdir() if p.name != "manifest.json"}
    assert before == after
    store_before = (out / "harvest" / "store_canonical.ndjson").read_bytes()
    assert run("--config", pipeline["config"], "--out", out, "harvest") == 0
    assert (out / "harvest" / "store_canonical.ndjson").read_bytes() == store_before


def test_version_and_help(capsys):
    assert run("--version") == 0
    assert __version__ in capsys.readouterr().out
    assert run("--help") == 0


def test_usage_errors_exit_2(tmp_path):
    assert run("--out", tmp_path, "no-such-command") == 2
    assert run("--out", tmp_path, "regress", "--variant", "bogus") == 2


def test_configuration_errors_exit_3(tmp_path, pipeline):
    assert run("--out", tmp_path, "revisit") == 3
    assert run("--config", tmp_path / "missing.json", "--out", tmp_path, "revisit") == 3
    doc = json.loads(pipeline["config"].read_text())
    doc["stac"][0]["token_env"] = "not a name"
    bad = pipeline["world"] / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run("--config", bad, "--out", tmp_path, "harvest") == 3


def test_missing_upstream_exits_4(tmp_path, pipeline):
    for stage in ("enrich", "ratio", "regress"):
        assert run("--config", pipeline["config"], "--out", tmp_path, stage) == 4


def test_tampered_upstream_exits_4(tmp_path, pipeline):
    copy = tmp_path / "out"
    shutil.copytree(pipeline["out"], copy)
    with open(copy / "harvest" / "store_canonical.ndjson", "a") as fh:
        fh.write("\n")
    assert run("--config", pipeline["config"], "--out", copy, "enrich") == 4


def test_propagation_failure_exits_6(tmp_path, pipeline):
    doc = json.loads(pipeline["config"].read_text())
    doc["window"] = {"start": "2030-01-01T00:00:00Z", "end": "2030-01-02T00:00:00Z"}
    cfg = pipeline["world"] / "far.json"
    cfg.write_text(json.dumps(doc))
    assert run("--config", cfg, "--out", tmp_path, "revisit") == 6


def test_unreachable_catalog_exits_7(tmp_path, pipeline):
    doc = json.loads(pipeline["config"].read_text())
    doc["stac"][0]["endpoint"] = "http://127.0.0.1:9/search"
    doc["max_retries"] = 1
    cfg = pipeline["world"] / "offline.json"
    cfg.write_text(json.dumps(doc))
    assert run("--config", cfg, "--out", tmp_path, "harvest") == 7


def test_regress_on_bundled_dataset(tmp_path):
    assert run("--out", tmp_path, "regress", "--dataset", "bundled", "--robust", "--forest", "--trees", 20) == 0
    d = tmp_path / "regress" / "main"
    assert (d / "importance.csv").is_file()
    table = (d / "table.md").read_text()
    assert "1726" in table and "***" in table
