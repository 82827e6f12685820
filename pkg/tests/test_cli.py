import csv
import json
import re

import pytest

from subdiffrange.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main


def _cfg(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _run(tmp_path, cmd, obj=None, *extra, out="out"):
    args = [cmd, "--out", str(tmp_path / out), *extra]
    if obj is not None:
        args += ["--config", _cfg(tmp_path, obj, f"{out}.json")]
    return main(args)


ONEDIM = {"kind": "onedim", "depth": 8, "cutoff": 16}
LEMMA = {"kind": "lemma", "cutoff": 64}


def test_build_onedim_table(tmp_path):
    assert _run(tmp_path, "build", ONEDIM) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "out" / "atoms.csv").open()))
    assert len(rows) == 16
    assert rows[0]["n"] == "1" and rows[0]["d_n"] == "1/2"
    assert float(rows[0]["alpha_n"]) <= float(rows[0]["beta_n"])
    doc = json.loads((tmp_path / "out" / "construction.json").read_text())
    assert doc["config"] == ONEDIM and doc["seed"] == 42


def test_build_lemma_coding_rows(tmp_path):
    assert _run(tmp_path, "build", LEMMA) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "out" / "coding.csv").open()))
    assert len(rows) == 8
    assert all(float(r["y"]) == 0.0 for r in rows)


@pytest.mark.parametrize("bad", [
    {"kind": "onedim", "cutoff": 0},
    {"kind": "onedim", "depth": "deep"},
    {"kind": "unknown"},
    {"kind": "lemma", "knots": "nope"},
])
def test_build_config_errors(tmp_path, bad):
    assert _run(tmp_path, "build", bad) == EXIT_CONFIG


def test_budget_exit(tmp_path):
    assert _run(tmp_path, "build", {"kind": "onedim", "cutoff": 5000}) == EXIT_BUDGET
    assert _run(tmp_path, "build", {"kind": "onedim", "depth": 30}) == EXIT_BUDGET


def test_missing_and_invalid_config(tmp_path):
    assert main(["build", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG
    p = tmp_path / "broken.json"
    p.write_text("{")
    assert main(["build", "--config", str(p)]) == EXIT_CONFIG
    assert main(["build"]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["verify", "--seed", "-1"]) == EXIT_CONFIG


def test_verify_sweeps(tmp_path):
    assert _run(tmp_path, "verify", None, "--sweep", "") == EXIT_CONFIG
    assert _run(tmp_path, "verify", None, "--sweep", "nonsense") == EXIT_CONFIG
    assert _run(tmp_path, "verify", {"sweeps": []}) == EXIT_CONFIG
    assert _run(tmp_path, "verify", None, "--sweep", "sigma,support-disjointness") == EXIT_OK
    doc = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert [s["name"] for s in doc["sweeps"]] == ["sigma", "support-disjointness"]
    assert all(s["passed"] for s in doc["sweeps"])


def test_accept_argument_errors(tmp_path):
    assert _run(tmp_path, "accept", None, "--sweep", "x") == EXIT_CONFIG
    assert _run(tmp_path, "accept", None, "--sweep", "12") == EXIT_CONFIG
    assert _run(tmp_path, "accept", None, "--sweep", "1") == EXIT_OK
    assert EXIT_FAIL == 1


def test_estimate_onedim(tmp_path):
    cfg = dict(ONEDIM, target=[0.25, 0.75])
    assert _run(tmp_path, "estimate", cfg) == EXIT_OK
    doc = json.loads((tmp_path / "out" / "estimate.json").read_text())
    assert doc["D_H"] <= 0.05
    assert (tmp_path / "out" / "estimate.svg").read_text().count('<g id="') == 3


def test_estimate_from_construction_file(tmp_path):
    assert _run(tmp_path, "build", LEMMA, out="b") == EXIT_OK
    cfg = {"construction": str(tmp_path / "b" / "construction.json"), "knot": 2}
    assert _run(tmp_path, "estimate", cfg) == EXIT_OK
    doc = json.loads((tmp_path / "out" / "estimate.json").read_text())
    assert doc["D_H"] <= 0.1
    assert doc["estimate"]["max_sample_norm"] <= 1 + 1e-9


def test_estimate_errors(tmp_path):
    assert _run(tmp_path, "estimate", {"target": [0, 1]}) == EXIT_CONFIG
    assert _run(tmp_path, "estimate", dict(ONEDIM, target=[0, 1], samples=10)) == EXIT_CONFIG
    assert _run(tmp_path, "estimate", dict(ONEDIM, target=[0, 1], samples=1 << 20)) == EXIT_BUDGET
    assert _run(tmp_path, "estimate", dict(ONEDIM, target=[0, 1], schedule=[0.1, 0.01])) == EXIT_CONFIG


def test_plot_layers(tmp_path):
    assert _run(tmp_path, "plot", ONEDIM, "--no-timestamp") == EXIT_OK
    svg = (tmp_path / "out" / "plot.svg").read_text()
    assert re.findall(r'<g id="([^"]+)"', svg) == ["f", "g", "alpha", "beta"]
    assert "generated" not in svg
    assert _run(tmp_path, "plot", LEMMA, out="p2") == EXIT_OK
    svg = (tmp_path / "p2" / "plot.svg").read_text()
    assert svg.count("<circle") >= 30
    assert re.search(r"<!-- generated \d{4}-\d\d-\d\dT", svg)


def test_byte_identical_reruns(tmp_path):
    blobs = []
    for out in ("r1", "r2"):
        assert _run(tmp_path, "build", LEMMA, "--seed", "7", out=out) == EXIT_OK
        assert _run(tmp_path, "plot", ONEDIM, "--no-timestamp", out=out + "p") == EXIT_OK
        blobs.append([(tmp_path / out / n).read_bytes() for n in ("construction.json", "atoms.csv", "coding.csv")]
                     + [(tmp_path / (out + "p") / "plot.svg").read_bytes()])
    assert blobs[0] == blobs[1]


def test_build_nonsmooth(tmp_path):
    assert _run(tmp_path, "build", {"kind": "nonsmooth", "depth": 6}) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "out" / "splitting.csv").open()))
    assert len(rows) == 7 and all(float(r["beta"]) > 0 for r in rows[1:])


def test_estimate_at_point(tmp_path):
    # default depth; coarser curves sit farther from their predicted intervals
    assert _run(tmp_path, "estimate", {"kind": "onedim", "point": [0.5]}) == EXIT_OK
    doc = json.loads((tmp_path / "out" / "estimate.json").read_text())
    assert doc["D_H"] <= 0.05
    assert _run(tmp_path, "estimate", dict(ONEDIM, point=[0.5, 0.5])) == EXIT_CONFIG
