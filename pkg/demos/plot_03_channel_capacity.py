"""
Side-channel capacity under different noise plans
=================================================

Treat the compressed trace as a Gaussian channel and see how much of its
capacity each noise scheme removes for the same number of impulses.
"""

import numpy as np

from artnoise import (DeviceNoise, NoisePlan, NoiseSpec, SelectionSet, compressed_capacity,
                      make_synthetic_model, mutual_information_mc, raw_capacity)

rng = np.random.default_rng(2)
m = 200
model = make_synthetic_model(m, 8, rng.choice(m, 20, replace=False), rng)
sel = SelectionSet.from_indices(m, model.informative)
noise = DeviceNoise(0.0, 3.0)
spec = NoiseSpec(0.0, 3.0, 1.0)
signals = model.signals()

print("raw capacity (bits):", raw_capacity(signals, noise).capacity_bits)

###############################################################################
# Sweep the budget.  ArN puts every impulse on a selected sample; RnP spends
# the same number uniformly at random, so on average only |sel|/m of it lands.
print(f"{'A':>4} {'ArN':>8} {'RnP':>8}")
for A in (0, 5, 10, 20, 40):
    arn = NoisePlan.arn(sel, A, rng)
    c_arn = compressed_capacity(signals, sel, arn, spec, noise).capacity_bits
    c_rnp = compressed_capacity(signals, sel, NoisePlan.rnp(arn), spec, noise).capacity_bits
    print(f"{A:4d} {c_arn:8.4f} {c_rnp:8.4f}")
print("RnF:", compressed_capacity(signals, sel, NoisePlan.rnf(m), spec, noise).capacity_bits)

###############################################################################
# For a single sample the Gaussian capacity is an upper bound on the true
# mutual information between key and leakage.
one = signals[:, [model.informative[0]]]
print("MI (MC):", mutual_information_mc(one, 3.0, 20_000, rng),
      "bound:", raw_capacity(one, noise).capacity_bits)
