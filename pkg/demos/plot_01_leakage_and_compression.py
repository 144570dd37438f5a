"""
Synthetic leakage and point selection
=====================================

Build a linear leakage model, record noisy traces for every key and
compare the points of interest picked by the DoM, SOST and SNR rules.
"""

import numpy as np

from artnoise import (CompressionMethod, DeviceNoise, compress, make_synthetic_model, select,
                      synth_traceset)

rng = np.random.default_rng(0)

###############################################################################
# A device with 200 samples per trace, an 8-bit secret and 20 samples that
# actually depend on it.  Everything else is pure device noise.
m, B = 200, 8
informative = np.sort(rng.choice(m, 20, replace=False))
model = make_synthetic_model(m, B, informative, rng)
noise = DeviceNoise(mu=0.0, sigma=3.0)
profiling = synth_traceset(model, noise, 30, rng)
print("informative samples:", informative.tolist())

###############################################################################
# Each rule scores every sample from the per-key means and variances and
# keeps the best ones.  ``kppc`` keeps k peaks per clock window of DoM
# scores, ``allap`` keeps everything above a fraction of the top score.
for name in ("1ppc", "3ppc", "allap", "sost:20", "snr:20"):
    sel = select(CompressionMethod.parse(name, clock_len=10), profiling)
    hits = len(set(sel.indices) & set(informative.tolist()))
    print(f"{name:>8}: {len(sel):3d} samples kept, {hits:2d} of them informative")

###############################################################################
# Compressing a trace just gathers the kept samples.
sel = select(CompressionMethod.parse("snr:20", 10), profiling)
x = profiling.get(17)
print("compressed trace shape:", compress(x, sel).shape)
print("selection as text:", sel.to_text())
