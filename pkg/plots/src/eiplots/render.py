"""Render figures from einet CSV artifacts.

Four figure kinds are supported, one per artifact family:

* ``raster``        — raster.csv (t, unit): activation scatter
* ``timeseries``    — trajectory.csv (t, w, z0..): base-phase sawtooth plus
                      up to three unit traces
* ``range_growth``  — curve_stats.csv: log winding range per generation
* ``concentration`` — curve_stats.csv: arclength fraction off the sink zone

The renderer fails loudly on missing columns (exit 3 with a column diff)
and produces byte-identical output on re-runs: fixed geometry, fixed SVG
hash salt, and no date metadata.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("raster", "timeseries", "range_growth", "concentration")

REQUIRED_COLUMNS = {
    "raster": ("t", "unit"),
    "timeseries": ("t", "w"),
    "range_growth": ("generation", "component", "range_psi"),
    "concentration": ("generation", "component", "frac_outside"),
}


class SchemaMismatch(Exception):
    def __init__(self, path: Path, missing: tuple[str, ...], found: tuple[str, ...]):
        self.missing = missing
        self.found = found
        super().__init__(
            f"{path}: missing column(s) {list(missing)}; header has {list(found)}"
        )


@dataclass(frozen=True)
class FigureRecipe:
    """Declarative description of one figure."""

    kind: str
    source: Path
    out: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")


def _read_table(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(path, required, ())
        missing = tuple(c for c in required if c not in header)
        if missing:
            raise SchemaMismatch(path, missing, tuple(header))
        rows = [row for row in reader if row]
    if rows:
        data = np.array(rows, dtype=float)
    else:
        data = np.empty((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def _deterministic_rcparams() -> None:
    plt.rcdefaults()
    plt.rcParams["svg.hashsalt"] = "einet-plots"
    plt.rcParams["figure.dpi"] = 100
    plt.rcParams["savefig.dpi"] = 100
    plt.rcParams["path.simplify"] = False


def _save(fig, out: Path) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if out.suffix.lower() == ".svg" else None
    fig.savefig(out, metadata=meta)
    plt.close(fig)


def _render_raster(table, out: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(table["t"], table["unit"], linestyle="", marker="|",
            markersize=6, color="black")
    ax.set_xlabel("time")
    ax.set_ylabel("unit")
    ax.set_title("activation raster")
    if table["unit"].size:
        ax.set_ylim(-0.5, table["unit"].max() + 0.5)
    _save(fig, out)


def _render_timeseries(table, out: Path) -> None:
    z_cols = sorted((c for c in table if c.startswith("z")),
                    key=lambda c: int(c[1:]))[:3]
    n_panels = 1 + len(z_cols)
    fig, axes = plt.subplots(n_panels, 1, figsize=(9, 2.0 * n_panels),
                             sharex=True, squeeze=False)
    axes = axes[:, 0]
    axes[0].plot(table["t"], table["w"], lw=0.8, color="tab:blue")
    axes[0].set_ylabel("w")
    for ax, col in zip(axes[1:], z_cols):
        ax.plot(table["t"], table[col], lw=0.8, color="tab:orange")
        ax.set_ylabel(col)
        ax.set_ylim(-0.02, 1.02)
    axes[-1].set_xlabel("time")
    axes[0].set_title("base phase and unit traces")
    fig.tight_layout()
    _save(fig, out)


def _render_range_growth(table, out: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    comps = np.unique(table["component"]).astype(int) if table["component"].size else []
    for c in comps:
        sel = table["component"] == c
        gens = table["generation"][sel]
        rng = np.maximum(table["range_psi"][sel], 1e-300)
        ax.semilogy(gens, rng, marker="o", label=f"component {c}")
    ax.set_xlabel("generation")
    ax.set_ylabel("winding range (kick stage)")
    ax.set_title("range growth")
    if len(comps):
        ax.legend()
    _save(fig, out)


def _render_concentration(table, out: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    comps = np.unique(table["component"]).astype(int) if table["component"].size else []
    for c in comps:
        sel = table["component"] == c
        ax.plot(table["generation"][sel], table["frac_outside"][sel],
                marker="s", label=f"component {c}")
    ax.set_xlabel("generation")
    ax.set_ylabel("arclength fraction off the sink zone")
    ax.set_ylim(bottom=0)
    ax.set_title("sink concentration")
    if len(comps):
        ax.legend()
    _save(fig, out)


_RENDERERS = {
    "raster": _render_raster,
    "timeseries": _render_timeseries,
    "range_growth": _render_range_growth,
    "concentration": _render_concentration,
}


def render(recipe: FigureRecipe) -> Path:
    """Render one figure; raises SchemaMismatch on malformed input."""
    table = _read_table(Path(recipe.source), REQUIRED_COLUMNS[recipe.kind])
    _deterministic_rcparams()
    _RENDERERS[recipe.kind](table, Path(recipe.out))
    return Path(recipe.out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="einet-plot",
        description="Render a figure from einet CSV artifacts (PNG or SVG by suffix)",
    )
    ap.add_argument("--kind", required=True, choices=KINDS)
    ap.add_argument("--in", dest="source", required=True, help="input CSV path")
    ap.add_argument("--out", dest="out", required=True, help="output image path")
    args = ap.parse_args(argv)
    try:
        out = render(FigureRecipe(args.kind, Path(args.source), Path(args.out)))
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
