import csv
import io
import json

import pytest

from recession_cascade import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_simulate_writes_outputs_and_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("simulate", "--runs", 40, "--seed", 3, "--out", a) == 0
    assert run("simulate", "--runs", 40, "--seed", 3, "--workers", 2, "--out", b) == 0
    for name in ("report.json", "counts_hist.csv", "durations.csv", "waits.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    report = json.loads((a / "report.json").read_text())
    assert report["kind"] == "simulation" and report["schema_version"] == 1
    assert report["stats"]["n_runs"] == 40
    assert sum(report["stats"]["counts_hist"]) == 40 * 136
    assert (a / "counts_hist.csv").read_text().splitlines()[0] == "value,count"


def test_simulate_single_run(tmp_path):
    assert run("simulate", "--runs", 1, "--out", tmp_path) == 0
    assert sum(json.loads((tmp_path / "report.json").read_text())["stats"]["counts_hist"]) == 136


def test_simulate_no_network(tmp_path):
    assert run("simulate", "--runs", 20, "--no-network", "--out", tmp_path) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["config"]["k"] == 0
    assert any("max simultaneous" in n for n in report["stats"]["notes"])


def test_simulate_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_runs": 5, "master_seed": 8, "mu": 0.2}))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "o") == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["config"]["mu"] == 0.2
    assert report["stats"]["n_runs"] == 5


@pytest.mark.parametrize("flags", [["--mu", "1.5"], ["--k", "9"], ["--pi", "0.2,0.1"], ["--runs", "0"]])
def test_simulate_bad_config_exit_2(tmp_path, flags, capsys):
    assert run("simulate", *flags, "--out", tmp_path) == 2
    assert "configuration error" in capsys.readouterr().err


def test_unknown_config_key_exit_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nope": 1}))
    assert run("simulate", "--config", cfg, "--out", tmp_path) == 2


def test_analyze_golden(tmp_path, synthetic_gdp, golden_dir):
    assert run("analyze", synthetic_gdp, "--out", tmp_path) == 0
    facts = json.loads((tmp_path / "facts.json").read_text())["facts"]
    golden = json.loads((golden_dir / "synthetic_facts.json").read_text())
    for key in ("counts_hist", "duration_counts", "wait_counts", "total_spells", "aggregate_recession_years"):
        assert facts[key] == golden[key]


def test_analyze_without_recessions(tmp_path):
    gdp = tmp_path / "flat.csv"
    gdp.write_text("year,A,B\n2000,1,2\n2001,2,3\n2002,3,4\n")
    assert run("analyze", gdp, "--out", tmp_path / "o") == 0
    payload = json.loads((tmp_path / "o" / "facts.json").read_text())
    assert payload["facts"]["total_spells"] == 0
    assert payload["fits"]["duration_nls"] is None


@pytest.mark.parametrize("text", ["yr,A\n2000,1\n", "year,A\n2000,x\n"])
def test_analyze_bad_input_exit_3(tmp_path, text, capsys):
    gdp = tmp_path / "bad.csv"
    gdp.write_text(text)
    assert run("analyze", gdp, "--out", tmp_path) == 3
    assert "bad.csv" in capsys.readouterr().err


def test_analyze_missing_file_exit_3(tmp_path):
    assert run("analyze", tmp_path / "absent.csv", "--out", tmp_path) == 3


def test_compare_self(tmp_path):
    assert run("simulate", "--runs", 30, "--out", tmp_path) == 0
    rep = tmp_path / "report.json"
    out = tmp_path / "cmp.json"
    assert run("compare", rep, rep, "--out", out) == 0
    cmp = json.loads(out.read_text())
    for name in ("counts", "durations", "waits"):
        assert cmp["ks"][name]["D"] == 0.0
        assert cmp["correlation"][name] == pytest.approx(1.0)


def test_compare_bad_schema_exit_3(tmp_path):
    bad = tmp_path / "x.json"
    bad.write_text(json.dumps({"hello": 1}))
    assert run("compare", bad, bad) == 3


def test_pathlen_single_point(capsys):
    assert run("pathlen", "--n", 17, "--k", 2, "--mu", 0, "--realizations", 3) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["mu", "mean_apl", "realizations"]
    assert float(rows[1][1]) == 2.5


def test_pathlen_two_curves(tmp_path):
    out = tmp_path / "apl.csv"
    assert run("pathlen", "--k", 1, "--k", 2, "--mu", "0:0.2:0.1", "--realizations", 5, "--out", out) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["k"] for r in rows] == ["1"] * 3 + ["2"] * 3
    assert float(rows[0]["mean_apl"]) == 4.5


def test_pathlen_invalid_k_exit_2():
    assert run("pathlen", "--k", 9, "--mu", 0) == 2


def test_sweep(tmp_path):
    assert run("simulate", "--runs", 20, "--seed", 1, "--out", tmp_path) == 0
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"mu": 0.1}, {"pi": [0.3, 0.5]}, {"mu": 7}]))
    assert run("sweep", grid, tmp_path / "report.json", "--runs", 20, "--seed", 1, "--out", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert len(rows) == 3
    assert rows[0]["error"] == "" and rows[0]["ks_counts"] != ""
    assert rows[1]["pi_lo"] == "0.3"
    assert rows[2]["error"].startswith("ConfigError")


def test_sweep_unknown_grid_key_exit_2(tmp_path):
    assert run("simulate", "--runs", 2, "--out", tmp_path) == 0
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([{"bogus": 1}]))
    assert run("sweep", grid, tmp_path / "report.json", "--out", tmp_path) == 2


def test_graph_exhaustion_exit_4(tmp_path, monkeypatch):
    from recession_cascade import smallworld

    monkeypatch.setattr(smallworld, "is_connected", lambda g: False)
    assert run("simulate", "--runs", 1, "--mu", 0.5, "--out", tmp_path) == 4
