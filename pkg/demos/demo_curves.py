"""Pushforward of an unstable curve: range growth and sink concentration.

Evolves a unit arc of the base unstable line (all fibers at the sink) for
five generations and prints, per generation, how far each fiber component
winds (its monotone-lift range), how many new jump singularities appear,
and what fraction of arclength escapes the sink zone.
"""
import math
from pathlib import Path

import numpy as np

from einet import load_params
from einet.curves import run_curve

config = Path(__file__).resolve().parents[1] / "configs" / "n2-valid.toml"
params = load_params(config)
lam = params.anosov.lam

run = run_curve(params, a=1.0, anchor=(0.2, 0.6), n_gens=5,
                xi_ladder=(0.1, 0.05, 0.025, 0.0125))

print(f"expansion factor per generation: e^lambda = {math.exp(lam):.4f}\n")
print("gen   domain     samples   range(kick stage)   new jumps   frac off sink")
for st in run.stats:
    print(f"{st.n:3d} {st.domain:9.2f} {st.samples:10d}   "
          f"{np.array2string(st.ranges_psi, precision=2):>18s}   "
          f"{st.new_jumps.tolist()!s:>9s}   "
          f"{np.array2string(st.frac_outside, precision=4)}")

ys = [math.log(max(st.ranges_psi)) for st in run.stats[1:]]
slope = float(np.polyfit(range(1, len(run.stats)), ys, 1)[0])
print(f"\nfitted log-range growth rate: {slope:.4f} (lambda = {lam:.4f})")

mass = run.mass_matrix().mean(axis=0)
print("pole-neighborhood mass, averaged over generations:")
for xi, m in zip(run.xi_ladder, mass):
    print(f"  xi = {xi:6.4f}: mass {m:.4f}  (mass/xi = {m / xi:.2f})")
