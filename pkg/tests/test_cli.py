import csv
import json
import shutil
import subprocess
from pathlib import Path

import pytest

from coarse_sigma.cli import main

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_sigma_integers(capsys):
    code, out, err = run(capsys, "sigma", "--space", "integers")
    doc = json.loads(out)
    assert code == 0
    assert (doc["sigma"], doc["K"]) == (2, 1)
    assert "sigma=2 K=1" in err


def test_sigma_vase_writes_report_and_trace(capsys, tmp_path):
    out, trace = tmp_path / "vase.json", tmp_path / "vase.csv"
    code, _, _ = run(capsys, "sigma", "--space", "vase-net", "--eps", "1",
                     "--out", str(out), "--csv", str(trace))
    assert code == 0
    doc = json.loads(out.read_text())
    assert (doc["sigma"], doc["K"]) == (1, 2)
    rows = list(csv.DictReader(trace.open()))
    assert set(rows[0]) == {"N", "r", "escaping_count"}
    assert {r["escaping_count"] for r in rows if r["N"] == "1"} == {"2"}


def test_sigma_star_tree(capsys):
    code, out, _ = run(capsys, "sigma", "--space", "star-tree", "--k", "4")
    assert code == 0 and json.loads(out)["sigma"] == 4


def test_sigma_inline_params_and_basepoint(capsys):
    code, out, _ = run(capsys, "sigma", "--space", "star-tree:k=3", "--basepoint", "[2, 5]",
                       "--r-max", "256")
    assert code == 0 and json.loads(out)["sigma"] == 3


def test_sigma_space_file(capsys, tmp_path):
    spec = tmp_path / "ray.json"
    spec.write_text(json.dumps({"builtin": "halfline-net", "params": {"eps": 1}}))
    code, out, _ = run(capsys, "sigma", "--space-file", str(spec))
    assert code == 0 and json.loads(out)["sigma"] == 1


def test_compare_vase_line(capsys):
    code, out, err = run(capsys, "compare", "--space", "vase-net:eps=1", "--space", "real-net:eps=1")
    doc = json.loads(out)
    assert code == 0
    assert doc["sigma"] == [1, 2]
    assert "not coarsely equivalent" in doc["conclusion"]
    assert "distinguished" in err


def test_compare_with_map_files(capsys):
    code, out, _ = run(capsys, "compare", "--map-file", str(DATA / "floor.json"),
                       "--map-file", str(DATA / "inclusion.json"))
    doc = json.loads(out)
    assert code == 0
    assert doc["maps_verified"] and doc["end_maps_bijective"]
    fwd = doc["equivalence"]["forward"]
    assert fwd["plan"]["D"] <= 0.5 and fwd["plan"]["D_target"] == 0
    assert fwd["f"]["bijective"] and fwd["g"]["bijective"] and fwd["commutes"]


def test_compare_self_by_identity(capsys, tmp_path):
    spec = {"builtin": "identity", "source": {"builtin": "integers"}, "target": {"builtin": "integers"}}
    path = tmp_path / "id.json"
    path.write_text(json.dumps(spec))
    code, out, _ = run(capsys, "compare", "--map-file", str(path), "--map-file", str(path))
    doc = json.loads(out)
    assert code == 0 and doc["maps_verified"]
    assert doc["equivalence"]["forward"]["plan"]["D"] == 0


def test_examples_default(capsys):
    code, out, _ = run(capsys, "examples")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 11 and all(line.startswith("[PASS]") for line in lines)


def test_examples_small_truncation(capsys):
    code, out, _ = run(capsys, "examples", "--r-max", "64", "--n-max", "4", "--window", "2")
    assert code == 0 and "FAIL" not in out


def test_examples_shifted(capsys):
    code, out, _ = run(capsys, "examples", "--r-max", "256", "--shifted", "--seed", "3")
    assert code == 0
    assert out.count("from basepoint") == 5 and "FAIL" not in out


@pytest.mark.parametrize("argv", [
    ["sigma", "--space", "hyperbolic"],
    ["sigma", "--space", "real-net", "--eps", "-1"],
    ["sigma"],
    ["sigma", "--space", "integers", "--space-file", "x.json"],
    ["sigma", "--space-file", "/nonexistent/space.json"],
    ["sigma", "--space", "integers", "--n-min", "5", "--n-max", "3"],
    ["sigma", "--space", "integers", "--r-max", "64"],
    ["sigma", "--space", "integers", "--basepoint", "up"],
    ["compare", "--space", "integers"],
    ["compare", "--map-file", "a.json"],
])
def test_input_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err.startswith("error:")


def test_malformed_space_file_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"metric": {"matrix": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}}))
    code, _, err = run(capsys, "sigma", "--space-file", str(bad))
    assert code == 1 and "triple" in err


def test_inconclusive_exit_two(capsys):
    code, out, _ = run(capsys, "sigma", "--space", "vase-net", "--n-max", "4", "--window", "3",
                       "--r-max", "64")
    assert code == 2
    assert json.loads(out)["K"] is None


def test_compare_inconclusive_exit_two(capsys):
    code, out, _ = run(capsys, "compare", "--space", "vase-net", "--space", "integers",
                       "--n-max", "4", "--window", "3", "--r-max", "64")
    assert code == 2 and json.loads(out)["conclusion"].startswith("inconclusive")


def test_outputs_are_byte_identical(capsys, tmp_path):
    paths = []
    for k in range(2):
        out, trace = tmp_path / f"r{k}.json", tmp_path / f"r{k}.csv"
        run(capsys, "sigma", "--space", "vase-net", "--r-max", "256", "--seed", "7",
            "--out", str(out), "--csv", str(trace))
        paths.append((out.read_bytes(), trace.read_bytes()))
    assert paths[0] == paths[1]
    a = run(capsys, "compare", "--map-file", str(DATA / "vase_project.json"),
            "--map-file", str(DATA / "vase_embed.json"), "--r-max", "256")
    b = run(capsys, "compare", "--map-file", str(DATA / "vase_project.json"),
            "--map-file", str(DATA / "vase_embed.json"), "--r-max", "256")
    assert a == b


@pytest.mark.skipif(shutil.which("coarse-sigma") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["coarse-sigma", "sigma", "--space", "integers", "--r-max", "256"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["sigma"] == 2
