import json
import subprocess
import sys
from pathlib import Path

import pytest

PKG_ROOT = Path(__file__).resolve().parents[2]
CONFIGS = PKG_ROOT / "configs"


def run_plot(*args):
    return subprocess.run([sys.executable, "-m", "eiplots.render", *args],
                          capture_output=True, text=True)


def run_einet(*args):
    return subprocess.run([sys.executable, "-m", "einet.cli", *args],
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def synthetic(tmp_path_factory):
    d = tmp_path_factory.mktemp("csv")
    (d / "raster.csv").write_text("t,unit\n0.5,0\n1.25,1\n2.0,0\n")
    (d / "empty_raster.csv").write_text("t,unit\n")
    (d / "trajectory.csv").write_text(
        "t,w,z0,z1\n" + "".join(f"{t/10},{(t/10) % 1.0},{0.1},{0.8}\n"
                                for t in range(40)))
    (d / "curve_stats.csv").write_text(
        "generation,component,domain,samples,range_theta,range_psi,range_zeta,"
        "new_jumps,total_jumps,min_slope,cond_min_slope,frac_outside\n"
        "0,0,1.0,100,0.0,0.4,2.0,3,3,0.2,16.3,0.04\n"
        "0,1,1.0,100,0.0,1.1,3.0,1,1,0.3,16.3,0.08\n"
        "1,0,3.7,800,2.0,4.0,9.0,12,15,0.2,16.3,0.035\n"
        "1,1,3.7,800,1.0,7.0,9.0,5,6,0.3,16.3,0.07\n")
    (d / "bad.csv").write_text("time,neuron\n0.5,0\n")
    return d


@pytest.mark.parametrize("kind,src", [
    ("raster", "raster.csv"),
    ("timeseries", "trajectory.csv"),
    ("range_growth", "curve_stats.csv"),
    ("concentration", "curve_stats.csv"),
])
@pytest.mark.parametrize("suffix", [".png", ".svg"])
def test_render_kinds_both_formats(synthetic, tmp_path, kind, src, suffix):
    out = tmp_path / f"{kind}{suffix}"
    r = run_plot("--kind", kind, "--in", str(synthetic / src), "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert out.exists() and out.stat().st_size > 500


def test_rerender_is_byte_identical(synthetic, tmp_path):
    for suffix in (".png", ".svg"):
        a = tmp_path / f"a{suffix}"
        b = tmp_path / f"b{suffix}"
        for out in (a, b):
            r = run_plot("--kind", "raster", "--in", str(synthetic / "raster.csv"),
                         "--out", str(out))
            assert r.returncode == 0
        assert a.read_bytes() == b.read_bytes()


def test_schema_mismatch_reports_column_diff(synthetic, tmp_path):
    r = run_plot("--kind", "raster", "--in", str(synthetic / "bad.csv"),
                 "--out", str(tmp_path / "x.png"))
    assert r.returncode == 3
    assert "t" in r.stderr and "unit" in r.stderr
    assert not (tmp_path / "x.png").exists()


def test_empty_raster_renders_valid_figure(synthetic, tmp_path):
    out = tmp_path / "empty.png"
    r = run_plot("--kind", "raster", "--in", str(synthetic / "empty_raster.csv"),
                 "--out", str(out))
    assert r.returncode == 0
    assert out.exists() and out.stat().st_size > 500


def test_missing_input_exits_two(tmp_path):
    r = run_plot("--kind", "raster", "--in", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "x.png"))
    assert r.returncode == 2


def test_criterion_11_end_to_end_from_primary_artifacts(tmp_path):
    """[SECONDARY] regenerate figures from fresh large-network artifacts,
    byte-identical on rerun."""
    raster_dir = tmp_path / "raster-run"
    traj_dir = tmp_path / "traj-run"
    curve_dir = tmp_path / "curve-run"
    r = run_einet("raster", str(CONFIGS / "fig3-like.toml"), "--t-end", "200",
                  "--seed", "7", "--output-dir", str(raster_dir))
    assert r.returncode == 0, r.stderr
    r = run_einet("simulate", str(CONFIGS / "fig3-like.toml"), "--t-end", "60",
                  "--seed", "7", "--output-dir", str(traj_dir))
    assert r.returncode == 0, r.stderr
    r = run_einet("curve", str(CONFIGS / "n2-valid.toml"), "--generations", "3",
                  "--seed", "7", "--output-dir", str(curve_dir))
    assert r.returncode == 0, r.stderr

    jobs = [
        ("raster", raster_dir / "raster.csv"),
        ("timeseries", traj_dir / "trajectory.csv"),
        ("range_growth", curve_dir / "curve_stats.csv"),
        ("concentration", curve_dir / "curve_stats.csv"),
    ]
    ok = True
    for kind, src in jobs:
        for suffix in (".png", ".svg"):
            first = tmp_path / f"{kind}-1{suffix}"
            second = tmp_path / f"{kind}-2{suffix}"
            for out in (first, second):
                r = run_plot("--kind", kind, "--in", str(src), "--out", str(out))
                assert r.returncode == 0, r.stderr
            ok &= first.read_bytes() == second.read_bytes()
    print(f"[{'PASS' if ok else 'FAIL'}] criterion 11 (figure regeneration): "
          "all four figure kinds render from fresh artifacts, "
          "byte-identical on rerun (PNG and SVG)")
    assert ok
