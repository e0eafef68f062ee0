import json
import subprocess
import sys
from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"
VALID = str(CONFIG_DIR / "n2-valid.toml")
INVALID = str(CONFIG_DIR / "n2-invalid-phi.toml")
FIG3 = str(CONFIG_DIR / "fig3-like.toml")


def run_cli(*args, env=None):
    import os

    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "einet.cli", *args],
        capture_output=True, text=True, env=full_env,
    )


def test_check_valid_exits_zero():
    r = run_cli("check", VALID)
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["passed"] is True
    assert "params_hash" in doc
    assert all("margin" in c for c in doc["checks"])


def test_check_invalid_phi_exits_one():
    r = run_cli("check", INVALID)
    assert r.returncode == 1
    doc = json.loads(r.stdout)
    assert doc["passed"] is False


def test_malformed_config_exits_two(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("this is {{{ not toml")
    r = run_cli("check", str(bad))
    assert r.returncode == 2


def test_missing_config_exits_two(tmp_path):
    r = run_cli("check", str(tmp_path / "nope.toml"))
    assert r.returncode == 2


def test_json_config_accepted(tmp_path):
    from einet import load_params, params_to_dict

    p = load_params(VALID)
    doc = tmp_path / "params.json"
    doc.write_text(json.dumps(params_to_dict(p)))
    r = run_cli("check", str(doc))
    assert r.returncode == 0


def test_commands_refuse_invalid_params_without_force(tmp_path):
    r = run_cli("sync", INVALID, "--trials", "2", "--steps", "5",
                "--output-dir", str(tmp_path / "out"))
    assert r.returncode == 1


def test_force_overrides_validation(tmp_path):
    r = run_cli("simulate", INVALID, "--force", "--t-end", "1.0",
                "--output-dir", str(tmp_path / "out"))
    # the invalid table makes the return time infinite only at full
    # inhibition; short runs go through under --force
    assert r.returncode == 0
    assert "warning" in r.stderr.lower()


def test_lyapunov_artifacts_and_determinism(tmp_path):
    out1, out2, out3 = (tmp_path / n for n in ("a", "b", "c"))
    r1 = run_cli("lyapunov", VALID, "--iters", "2000", "--transient", "50",
                 "--seed", "11", "--output-dir", str(out1))
    r2 = run_cli("lyapunov", VALID, "--iters", "2000", "--transient", "50",
                 "--seed", "11", "--output-dir", str(out2))
    r3 = run_cli("lyapunov", VALID, "--iters", "2000", "--transient", "50",
                 "--seed", "12", "--output-dir", str(out3))
    assert r1.returncode == r2.returncode == r3.returncode == 0
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    m3 = json.loads((out3 / "manifest.json").read_text())
    for name in ("exponents.json", "convergence.csv", "orbit.csv"):
        assert m1["files"][name]["sha256"] == m2["files"][name]["sha256"]
    assert m1["files"]["convergence.csv"]["sha256"] != m3["files"]["convergence.csv"]["sha256"]
    header = (out1 / "orbit.csv").read_text().splitlines()[0]
    assert header == "step,x,y,z0,z1,tau,act0,act1"


def test_manifest_checksums_match_files(tmp_path):
    from einet.artifacts import file_sha256

    out = tmp_path / "run"
    r = run_cli("simulate", VALID, "--t-end", "3.0", "--seed", "4",
                "--output-dir", str(out))
    assert r.returncode == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["files"], "manifest must list artifacts"
    for name, meta in manifest["files"].items():
        assert file_sha256(out / name) == meta["sha256"]
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,w,z0,z1"


def test_output_dir_from_environment(tmp_path):
    r = run_cli("raster", FIG3, "--t-end", "5.0",
                env={"EINET_OUTPUT_DIR": str(tmp_path)})
    assert r.returncode == 0
    assert (tmp_path / "raster" / "raster.csv").exists()


def test_raster_summary_counts_units(tmp_path):
    r = run_cli("raster", FIG3, "--t-end", "30.0", "--seed", "7",
                "--output-dir", str(tmp_path / "r"))
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert doc["units_active"] == 20
    header = (tmp_path / "r" / "raster.csv").read_text().splitlines()[0]
    assert header == "t,unit"


def test_sync_and_birkhoff_smoke(tmp_path):
    r = run_cli("sync", VALID, "--trials", "5", "--steps", "10", "--seed", "1",
                "--threads", "2", "--output-dir", str(tmp_path / "s"))
    assert r.returncode == 0
    assert json.loads(r.stdout)["success_rate"] == 1.0
    r = run_cli("birkhoff", VALID, "--starts", "2", "--returns", "500",
                "--seed", "1", "--output-dir", str(tmp_path / "b"))
    assert r.returncode == 0
    rows = (tmp_path / "b" / "birkhoff.csv").read_text().splitlines()
    assert rows[0] == "start,observable,value"
    assert len(rows) == 1 + 5 * 2  # five catalog observables, two starts


def test_curve_and_concentration_smoke(tmp_path):
    r = run_cli("curve", VALID, "--generations", "2", "--seed", "1",
                "--snapshot-rows", "500", "--output-dir", str(tmp_path / "c"))
    assert r.returncode == 0
    stats = json.loads((tmp_path / "c" / "stats.json").read_text())
    assert stats["generations"] == 2
    assert (tmp_path / "c" / "snapshot.csv").exists()
    r = run_cli("concentration", VALID, "--generations", "2", "--seed", "1",
                "--xi", "0.1", "0.05", "--output-dir", str(tmp_path / "k"))
    assert r.returncode == 0
    doc = json.loads(r.stdout)
    assert len(doc["c3_fit"]) == 2
