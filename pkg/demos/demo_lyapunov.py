"""Lyapunov spectrum of the section return map on the certified network.

The base automorphism contributes +-lambda exactly; the inhibitory fibers
contract so strongly that their exponents sit near the sink linearization
lambda_minus * (average crossing time).
"""
import math
from pathlib import Path

import numpy as np

from einet import load_params
from einet.returnmap import SectionPoint, lyapunov_spectrum

config = Path(__file__).resolve().parents[1] / "configs" / "n2-valid.toml"
params = load_params(config)

result = lyapunov_spectrum(SectionPoint(0.37, 0.21, np.zeros(params.N)),
                           n_transient=1000, n_iter=50_000, params=params, seed=7)

lam = params.anosov.lam
print(f"base expansion rate lambda = {lam:.6f}")
print("estimated exponents (descending):")
for e, se in zip(result.exponents, result.stderr):
    print(f"  {e:+12.6f}  (se {se:.2e})")
print(f"top vs lambda: relative error {abs(result.exponents[0] - lam) / lam:.2e}")

# crude prediction for the fiber exponents: sink linearization at tau ~ 1-b
pred = params.fibers[0].lambda_minus * (1 - params.b)
print(f"sink linearization at the shortest crossing time: {pred:.2f}")
