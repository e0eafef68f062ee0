"""Persistence: CSV/JSON writers, checksums, manifests and seed fan-out.

Floats are written with ``repr`` (shortest round-trip), so identical inputs
give byte-identical artifacts.  A master seed fans out to per-trial
generators through ``SeedSequence([master, trial_index])``, making any trial
reproducible in isolation.
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ARTIFACT_SCHEMA = "ei-artifacts/1"


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Deterministic per-trial generator from the master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(trial)]))


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunWriter:
    """Tracks files written by one command so failures can clean up and the
    manifest can list every artifact with its checksum."""

    outdir: Path
    command: str
    params_hash: str
    seed: int
    settings: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    _t0: float = field(default_factory=time.perf_counter)

    def __post_init__(self):
        self.outdir = Path(self.outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        path = self.outdir / name
        count = 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
                count += 1
        self.files[name] = {"sha256": file_sha256(path), "rows": count}
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.outdir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        self.files[name] = {"sha256": file_sha256(path)}
        return path

    def finish(self) -> dict:
        import einet

        manifest = {
            "schema": ARTIFACT_SCHEMA,
            "command": self.command,
            "params_hash": self.params_hash,
            "seed": self.seed,
            "trial_seed_scheme": "SeedSequence([seed, trial_index])",
            "settings": self.settings,
            "files": self.files,
            "versions": {"einet": einet.__version__, "numpy": np.__version__},
            "wall_time_s": round(time.perf_counter() - self._t0, 3),
        }
        (self.outdir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
        return manifest

    def cleanup(self) -> None:
        """Remove everything written so far (used on failure)."""
        for name in list(self.files):
            try:
                (self.outdir / name).unlink(missing_ok=True)
            except OSError:
                pass
        self.files.clear()
