from __future__ import annotations

import csv
import json
import math
import subprocess
import sys
from importlib.resources import files

import numpy as np
import pytest

from tqsg import cli, io, thermo


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_construct_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("construct", "--gallager", 30, 2, 3, "--seed", 1, "--out", tmp_path / d) == 0
    assert io.sha256(tmp_path / "a" / "code.bundle") == io.sha256(tmp_path / "b" / "code.bundle")
    s = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert s["n"] == 30 and s["k"] >= 10 and s["k_des"] == 9
    m = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert m["version"] == io.TOOL_VERSION and m["config"]["seed"] == 1
    assert m["outputs"]["code.bundle"] == io.sha256(tmp_path / "a" / "code.bundle")


def test_construct_hgp_size(tmp_path):
    assert run("construct", "--gallager", 150, 14, 15, "--seed", 7, "--hgp", "self", "--no-logicals",
               "--out", tmp_path) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["N"] == 150 ** 2 + 140 ** 2 == 42100
    assert s["K"] == 42100 - s["rank_x"] - s["rank_z"]


def test_global_flags_before_or_after_subcommand(tmp_path):
    assert run("--seed", 5, "construct", "--gallager", 30, 2, 3, "--out", tmp_path / "a") == 0
    assert run("construct", "--gallager", 30, 2, 3, "--seed", 5, "--out", tmp_path / "b") == 0
    assert io.sha256(tmp_path / "a" / "code.bundle") == io.sha256(tmp_path / "b" / "code.bundle")


def test_invalid_parameters_exit_code(tmp_path):
    assert run("construct", "--gallager", 31, 2, 3, "--out", tmp_path) == cli.EXIT_PARAMS


def test_missing_file_and_bad_grid(tmp_path):
    assert run("validate", "--code", tmp_path / "nope", "--out", tmp_path) == cli.EXIT_MISSING
    assert run("thermo", "--r", 0.1, "--tmin", 1, "--tmax", 0.5, "--out", tmp_path) == cli.EXIT_GRID
    assert run("sample", "--code", tmp_path / "nope", "--beta", "x", "--out", tmp_path) == cli.EXIT_MISSING


@pytest.fixture(scope="module")
def hamming_bundle(tmp_path_factory):
    d = tmp_path_factory.mktemp("ham")
    assert run("construct", "--hamming", 3, "--hgp", "self", "--out", d) == 0
    return d / "code.bundle"


def test_validate_and_confine(hamming_bundle, tmp_path):
    assert run("validate", "--code", hamming_bundle, "--out", tmp_path / "v") == 0
    v = json.loads((tmp_path / "v" / "validation.json").read_text())
    assert v["commutes"] and v["k"] == 16
    assert run("confine", "--code", hamming_bundle, "--cap", 2, "--out", tmp_path / "c") == 0
    rows = read_csv(tmp_path / "c" / "confinement.csv")
    assert [r["reduced_weight"] for r in rows] == ["1", "2"]
    # a confinement threshold above the measured one is an invariant violation
    assert run("confine", "--code", hamming_bundle, "--cap", 2, "--gamma", 5, "--out", tmp_path / "d") \
        == cli.EXIT_INVARIANT


def test_validate_flags_broken_bundle(hamming_bundle, tmp_path):
    text = hamming_bundle.read_text().replace("css n=58 k=16", "css n=58 k=15")
    bad = tmp_path / "bad.bundle"
    bad.write_text(text)
    assert run("validate", "--code", bad, "--out", tmp_path / "v") == cli.EXIT_INVARIANT


def test_thermo_curve(tmp_path):
    assert run("thermo", "--curve", "f", "--r", 0.0023753, "--gamma", 3, "--tmin", 0.05, "--tmax", 0.5,
               "--out", tmp_path) == 0
    vals = [float(r["value"]) for r in read_csv(tmp_path / "curve.csv")]
    assert len(vals) == 10 and all(v > 0 for v in vals) and all(np.diff(vals) > 0)


def test_percolate_zero_density(tmp_path):
    assert run("percolate", "--p", 0, "--trials", 20, "--tmax", 5, "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "tail.csv")
    assert [float(r["empirical_tail"]) for r in rows] == [0.0] * 5


def test_bottleneck_matches_golden(tmp_path):
    assert run("bottleneck", "--mode", "exact", "--format", "json", "--out", tmp_path) == 0
    got = json.loads((tmp_path / "bottleneck.json").read_text())
    gold = json.loads(files("tqsg.data").joinpath("bottleneck14_golden.json").read_text())["results"]
    assert len(got) == len(gold)
    for g, w in zip(got, gold):
        assert g["beta"] == w["beta"]
        assert set(g) >= {"beta", "log_w_omega", "log_w_boundary", "log_ratio", "mode", "seed"}
        for k in ("log_w_omega", "log_w_boundary", "log_ratio"):
            assert g[k] == pytest.approx(w[k], rel=1e-12, abs=1e-12)


def test_sample_agrees_with_thermo(hamming_bundle, tmp_path):
    assert run("sample", "--code", hamming_bundle, "--samples", 3000, "--out", tmp_path) == 0
    for r in read_csv(tmp_path / "sample.csv"):
        beta = float(r["beta"])
        eps = float(thermo.mean_energy_density(beta, 16 / 58))
        assert abs(float(r["energy_density"]) - eps) * 58 < 3 * float(r["sigma"])


def test_protocol_outputs_are_reproducible(hamming_bundle, tmp_path):
    args = ["protocol", "--code", hamming_bundle, "--grid", "0.5,1,2", "--sweeps", 20, "--measure", 10,
            "--seeds", 2, "--seed", 3]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    rows = read_csv(tmp_path / "a" / "trace.csv")
    assert list(rows[0]) == ["step", "T", "beta", "energy_density", "acceptance", "seed", "protocol"]
    assert len(rows) == 2 * 2 * 3
    m = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert len(m["child_seeds"]) == 4


def test_protocol_parallel_matches_serial(hamming_bundle, tmp_path, monkeypatch):
    args = ["protocol", "--code", hamming_bundle, "--grid", "1,2", "--sweeps", 5, "--measure", 5, "--seeds", 2]
    assert run(*args, "--out", tmp_path / "s") == 0
    monkeypatch.setenv("TQSG_THREADS", "2")
    assert run(*args, "--out", tmp_path / "p") == 0
    assert (tmp_path / "s" / "trace.csv").read_bytes() == (tmp_path / "p" / "trace.csv").read_bytes()


def test_barrier_and_memory(hamming_bundle, tmp_path):
    assert run("barrier", "--code", hamming_bundle, "--beta", "inf", "--growth", 4, "--trials", 5,
               "--out", tmp_path / "b") == 0
    s = json.loads((tmp_path / "b" / "barrier_summary.json").read_text())
    assert s["excluded_negative"] == 0 and s["min_ratio_slope"] > 0
    assert run("memory", "--code", hamming_bundle, "--beta", "inf,0", "--sweeps", 5, "--trials", 4,
               "--out", tmp_path / "m") == 0
    rows = read_csv(tmp_path / "m" / "memory.csv")
    assert float(rows[0]["retained"]) == 1.0


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "tqsg", "thermo", "--curve", "epsilon", "--r", "0.5",
                          "--tmin", "1", "--tmax", "1", "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0
    v = float(read_csv(tmp_path / "curve.csv")[0]["value"])
    assert v == pytest.approx(0.5 / (1 + math.e))


def test_thermo_points_sets_grid(tmp_path):
    out = tmp_path / "t"
    assert cli.main(["--out", str(out), "thermo", "--curve", "epsilon", "--r", "0.1",
                     "--tmin", "0.1", "--tmax", "1", "--points", "7"]) == 0
    assert len((out / "curve.csv").read_text().strip().splitlines()) == 8
