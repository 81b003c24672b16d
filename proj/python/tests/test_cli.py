import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("WKAM_CLI", "wkam")


def run(*args, cache, check=True):
    env = dict(os.environ, WKAM_CACHE_DIR=str(cache))
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, env=env)
    if check and proc.returncode != 0:
        raise AssertionError(f"exit {proc.returncode}: {proc.stderr}")
    return proc


def data_rows(path):
    return [line for line in Path(path).read_text().splitlines()[2:] if line]


@pytest.fixture
def cache(tmp_path):
    return tmp_path / "cache"


def test_solve_pendulum_zero(tmp_path, cache):
    out = tmp_path / "p0"
    run("solve", "--system", "pendulum", "--c", 0, "--grid", 256, "-o", out, cache=cache)
    assert abs(float((out / "alpha.txt").read_text())) < 1e-3
    manifest = json.loads((out / "manifest.json").read_text())
    assert "alpha.txt" in json.dumps(manifest)


def test_solve_free(tmp_path, cache):
    out = tmp_path / "f1"
    run("solve", "--system", "free", "--c", 1, "--grid", 128, "-o", out, cache=cache)
    assert abs(float((out / "alpha.txt").read_text()) - 0.5) < 1e-3


def test_rerun_is_byte_identical(tmp_path, cache):
    out = tmp_path / "a"
    names = ("crit.csv", "critical_values.csv", "config.ini", "manifest.json")
    run("crit", "--system", "pendulum", "--grid", 128, "-o", out, cache=cache)
    first = {name: (out / name).read_bytes() for name in names}
    run("crit", "--system", "pendulum", "--grid", 128, "-o", out, cache=tmp_path / "fresh")
    for name in names:
        assert (out / name).read_bytes() == first[name]


def test_crit_finds_both_equilibria(tmp_path, cache):
    out = tmp_path / "crit"
    run("crit", "--system", "pendulum", "--grid", 256, "-o", out, cache=cache)
    xs = [float(row.split(",")[0]) for row in data_rows(out / "crit.csv")]
    assert len(xs) == 2

    def near(x, target):
        d = (x - target) % 1.0
        return min(d, 1.0 - d) < 1e-2

    assert any(near(x, 0.0) for x in xs)
    assert any(near(x, 0.5) for x in xs)


def test_conley_free_is_empty(tmp_path, cache):
    out = tmp_path / "conley"
    run("conley", "--system", "free", "--c", 1, "--grid", 128, "-o", out, cache=cache)
    assert data_rows(out / "recurrent.csv") == []


def test_no_compute_without_prerequisite(tmp_path, cache):
    proc = run("crit", "--system", "pendulum", "--grid", 64, "--no-compute", "-o", tmp_path / "x",
               cache=cache, check=False)
    assert proc.returncode == 4
    assert "missing prerequisite" in proc.stderr


def test_bad_config(tmp_path, cache):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[system]\nsystem = pendulum\nnot_a_key = 3\n")
    proc = run("solve", "--config", cfg, "-o", tmp_path / "y", cache=cache, check=False)
    assert proc.returncode == 4
    proc = run("solve", "--system", "no_such_system", "-o", tmp_path / "z", cache=cache, check=False)
    assert proc.returncode == 4


def test_twist_orbit(tmp_path, cache):
    out = tmp_path / "tw"
    run("twist", "--k", 0, "--p", 2, "--q", 5, "-o", out, cache=cache)
    info = json.loads((out / "twist.json").read_text())
    assert abs(info["rotation_number"] - 0.4) < 1e-12
