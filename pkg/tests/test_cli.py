import json
import subprocess
import sys


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "rainbowopt.cli", *args],
                          capture_output=True, text=True)


def test_gen_and_mst_pipeline(tmp_path):
    f = tmp_path / "i.txt"
    r = run_cli("gen", "--kind", "euclid", "--n", "12", "--q", "11",
                "--seed", "9", "--out", str(f))
    assert r.returncode == 0
    r = run_cli("mst", "--input", str(f))
    assert r.returncode == 0
    assert float(r.stdout.strip()) > 0


def test_rainbow_mst_with_oracle(tmp_path):
    f = tmp_path / "i.txt"
    run_cli("gen", "--kind", "uniform", "--n", "7", "--q", "6",
            "--seed", "4", "--out", str(f))
    r = run_cli("rainbow-mst", "--input", str(f), "--oracle")
    assert r.returncode == 0, r.stderr
    assert float(r.stdout.strip()) > 0


def test_rainbow_mst_infeasible_exit_2(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("uniform 3 1 0\n0.5\n0.5\n0.5\n0\n0\n0\n")
    r = run_cli("rainbow-mst", "--input", str(f))
    assert r.returncode == 2
    assert "infeasible" in r.stdout


def test_malformed_input_exit_1(tmp_path):
    f = tmp_path / "mal.txt"
    f.write_text("uniform 3 2 0\n0.5\n0.5\n0.5\n0\n0\n7\n")
    r = run_cli("rainbow-mst", "--input", str(f))
    assert r.returncode == 1
    assert "line 7" in r.stderr and "color" in r.stderr


def test_tree_construct_cli(tmp_path):
    f = tmp_path / "i.txt"
    d = tmp_path / "diag.json"
    run_cli("gen", "--kind", "euclid", "--n", "150", "--q", "149",
            "--seed", "6", "--out", str(f))
    r = run_cli("tree-construct", "--input", str(f), "--K", "12",
                "--diag", str(d))
    assert r.returncode == 0, r.stdout + r.stderr
    diag = json.loads(d.read_text())
    assert diag["matching_size"] == 149
    assert {"E1_size", "E2_size", "gamma_weight", "A_size"} <= set(diag)


def test_tour_greedy_cli(tmp_path):
    f = tmp_path / "i.txt"
    run_cli("gen", "--kind", "euclid", "--n", "250", "--q", "300",
            "--seed", "6", "--out", str(f))
    r = run_cli("tour-greedy", "--input", str(f))
    assert r.returncode == 0, r.stdout + r.stderr


def test_constants_subcommand():
    r = run_cli("constants")
    assert r.returncode == 0
    assert "zeta3 1.2020" in r.stdout
    assert "tau 2.04154" in r.stdout


def test_experiment_and_rerun(tmp_path):
    out = tmp_path / "exp.csv"
    r = run_cli("experiment", "--kind", "kruskal-uniform", "--n-grid", "20", "40",
                "--seeds", "3", "--out", str(out), "--base-seed", "5")
    assert r.returncode == 0, r.stderr
    summary = json.loads(r.stdout)
    assert summary["kind"] == "kruskal-uniform"
    r = run_cli("rerun", "--csv", str(out), "--row", "0")
    assert r.returncode == 0, r.stdout
    assert "stored=" in r.stdout


def test_unknown_experiment_kind_exit_1(tmp_path):
    r = run_cli("experiment", "--kind", "bogus", "--n-grid", "10",
                "--seeds", "1", "--out", str(tmp_path / "x.csv"))
    assert r.returncode == 1
