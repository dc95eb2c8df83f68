import csv
import io
import json
import subprocess
import sys

import pytest

from coophunt import cli
from coophunt.equilibria import beta_star, interior_equilibria
from coophunt.model import Params
from coophunt.ns import neimark_sacker

FAST = ["--burn-in", "2000", "--window", "1000"]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def run_json(argv, capsys):
    code, out, _ = run(argv + ["--format", "json"], capsys)
    assert code == 0
    return json.loads(out)


def test_equilibria_two_interior_rows(capsys):
    doc = run_json(["equilibria", "--lambda", "10", "--alpha", "15", "--beta", "0.09"], capsys)
    assert doc["schema_version"] == cli.SCHEMA_VERSION
    rows = doc["data"]["equilibria"]
    assert [r["kind"] for r in rows].count("interior") == 2
    assert doc["data"]["critical_set"]["beta_star"] == pytest.approx(0.066502, abs=1e-5)
    assert doc["data"]["regime"]["predicted_count_bound"] == "at most 2"


def test_equilibria_one_interior_row(capsys):
    doc = run_json(["equilibria", "--lambda", "5", "--alpha", str(1 / 2.1), "--beta", "0.525"],
                   capsys)
    assert [r["kind"] for r in doc["data"]["equilibria"]].count("interior") == 1


def test_equilibria_low_growth(capsys):
    doc = run_json(["equilibria", "--lambda", "0.5", "--beta", "1"], capsys)
    rows = doc["data"]["equilibria"]
    assert [r["kind"] for r in rows] == ["E0"]
    assert rows[0]["stability"] == "sink" and doc["data"]["globally_stable"] == "E0"


def test_raw_parameters(capsys):
    doc = run_json(["equilibria", "--raw", "--lambda", "10", "--a", "2.1", "--k", "1",
                    "--beta", "0.3", "--alpha", "15"], capsys)
    m = doc["manifest"]
    assert m["params"]["beta"] == pytest.approx(0.63) and m["raw_params"]["a"] == 2.1


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_isoclines_columns(capsys):
    code, out, err = run(["isoclines", "--lambda", "5", "--beta", "0.3", "--alpha", "0.4",
                          "--samples", "11", "--format", "csv"], capsys)
    assert code == 0 and out.splitlines()[0] == "y,h,f,w"
    rows = _csv(out)
    assert float(rows[0]["f"]) == 4.0 and len(rows) == 11
    assert json.loads(err)["manifest"]["samples"] == 11


def test_isoclines_tangency_and_nonexistence(capsys):
    code, out, _ = run(["isoclines", "--lambda", "10", "--alpha", "15", "--at-beta-star",
                        "--samples", "4001", "--format", "csv"], capsys)
    assert code == 0
    gap = min(abs(float(r["h"]) - float(r["f"])) for r in _csv(out))
    assert gap < 1e-3
    code, out, _ = run(["isoclines", "--lambda", "15", "--alpha", "1.2", "--beta", "0.05",
                        "--samples", "401", "--format", "csv"], capsys)
    assert all(float(r["h"]) > float(r["f"]) for r in _csv(out))


def test_ns_reports(capsys):
    doc = run_json(["ns", "--lambda", "5", "--alpha", str(1 / 2.1)], capsys)
    r = doc["data"]["report"]
    assert r["beta_d"] == pytest.approx(0.6, abs=0.02) and r["direction"] == "supercritical"
    assert len(r["b"]) == 7 and len(r["l"]) == 7 and set(r["xi21"]) == {"re", "im"}
    doc = run_json(["ns", "--lambda", "5", "--alpha", str(3 / 2.1)], capsys)
    assert doc["data"]["report"]["transversality"] > 0
    doc = run_json(["ns", "--lambda", "0.5"], capsys)
    assert doc["data"]["status"] == "no_ns_point"


def test_ns_csv_has_every_coefficient(capsys):
    code, out, _ = run(["ns", "--lambda", "5", "--alpha", str(1 / 2.1), "--format", "csv"], capsys)
    names = [r["quantity"] for r in _csv(out)]
    for want in ["b7", "c4", "k7", "l7", "xi21_im", "c_star", "direction"]:
        assert want in names


def test_sweep_and_empty_range(capsys):
    code, out, _ = run(["sweep", "--lambda", "5", "--alpha", str(1 / 2.1), "--beta-min", "0.2",
                        "--beta-max", "0.3", "--beta-steps", "3", "--format", "csv"] + FAST, capsys)
    assert code == 0
    rows = _csv(out)
    assert [float(r["beta"]) for r in rows] == [0.2, 0.25, 0.3]
    assert out.splitlines()[0] == ",".join(cli.SWEEP_COLUMNS)
    code, _, err = run(["sweep", "--lambda", "5", "--beta-min", "0.3", "--beta-max", "0.3"], capsys)
    assert code == 2 and json.loads(err)["exit_code"] == 2


def test_basin_labels(capsys):
    doc = run_json(["basin", "--lambda", "5", "--beta", "0.188", "--alpha", str(20 / 2.1),
                    "--grid", "8x6", "--burn-in", "10000", "--window", "2000"], capsys)
    d = doc["data"]
    assert len(d["labels"]) == 6 and len(d["labels"][0]) == 8
    assert d["counts"].get("boundary_e1", 0) > 0 and d["counts"].get("fixed_point", 0) > 0


def test_simulate_and_classify(capsys):
    code, out, _ = run(["simulate", "--lambda", "5", "--beta", "0.21", "--alpha", "9.5",
                        "--x0", "2.3", "--y0", "0.2", "--steps", "3", "--format", "csv"], capsys)
    rows = _csv(out)
    assert len(rows) == 4 and float(rows[0]["x"]) == 2.3
    doc = run_json(["classify", "--lambda", "0.8", "--beta", "1", "--alpha", "1",
                    "--x0", "1", "--y0", "1"] + FAST, capsys)
    assert doc["data"]["orbits"][0]["attractor"] == "origin"


def test_regime_table(capsys):
    doc = run_json(["regime-table", "--grid", "3"], capsys)
    cells = doc["data"]["cells"]
    assert len(cells) == 27 and all(c["consistent"] for c in cells)


@pytest.mark.parametrize("argv, code", [
    (["equilibria", "--lambda", "-1", "--beta", "1"], 2),
    (["equilibria", "--lambda", "5"], 2),
    (["equilibria", "--lambda", "5", "--beta", "1", "--tol", "nope=1"], 2),
    (["isoclines", "--lambda", "0.9", "--beta", "1"], 4),
    (["classify", "--lambda", "5", "--beta", "1", "--burn-in", "10"], 2),
])
def test_exit_codes(argv, code, capsys):
    got, _, err = run(argv, capsys)
    assert got == code
    rec = json.loads(err)
    assert rec["exit_code"] == code and rec["message"]


def test_tolerance_override_recorded_and_restored(capsys):
    from coophunt import equilibria
    doc = run_json(["equilibria", "--lambda", "5", "--beta", "0.3", "--tol", "scan_points=512"],
                   capsys)
    assert doc["manifest"]["settings"]["scan_points"] == 512
    assert equilibria.SCAN_POINTS == 4096


def test_manifest_lists_every_setting(capsys):
    doc = run_json(["equilibria", "--lambda", "5", "--beta", "0.3"], capsys)
    m = doc["manifest"]
    assert set(cli.TOLERANCES) == set(m["settings"])
    for key in ("version", "seed", "burn_in", "window", "subcommand", "params"):
        assert key in m


def test_reproducible_files(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        code = cli.main(["classify", "--lambda", "5", "--beta", "0.525", "--alpha", "0.4",
                         "--trials", "4", "--seed", "9", "--format", "csv",
                         "--out", str(path)] + FAST)
        assert code == 0
        outs.append((path.read_bytes(), (tmp_path / f"run{i}.csv.manifest.json").read_bytes()))
    assert outs[0] == outs[1]


def test_json_round_trip():
    report = neimark_sacker(5, 1 / 2.1)
    data = {"report": report, "eq": interior_equilibria(Params(10, 0.09, 15)),
            "tangency": beta_star(10, 15)}
    plain = cli.to_jsonable(data)
    assert json.loads(json.dumps(plain)) == plain
    assert plain["report"]["c_star"] == report.c_star
    assert plain["report"]["xi20"] == {"re": report.xi20.real, "im": report.xi20.imag}


def test_csv_floats_round_trip():
    vals = [0.1, 1 / 3, 2.0 ** -40, 123456.789e10]
    text = cli.csv_text(["v"], [{"v": v} for v in vals])
    assert [float(r["v"]) for r in _csv(text)] == vals


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "coophunt", "--version"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
