"""
Profiling and template attack
=============================

Fit the leakage coefficients from profiling traces, build Gaussian
templates with a pooled covariance and recover keys from a few traces.
"""

import numpy as np

from artnoise import (CompressionMethod, Device, DeviceNoise, NoisePlan, NoiseSpec, attack,
                      build_templates, make_synthetic_model, profile, run_trial, select)

rng = np.random.default_rng(3)
m = 200
model = make_synthetic_model(m, 8, rng.choice(m, 20, replace=False), rng)
device = Device(model, DeviceNoise(0.0, 3.0))

profiling = device.traceset(20, rng)
sel = select(CompressionMethod.parse("snr:20", 10), profiling)
templates = build_templates(profile(profiling, sel), profiling)

###############################################################################
# Attack a handful of keys with 10 traces each.
for key in (0, 42, 200):
    traces, _ = device.capture(key, 10, rng)
    print(f"key {key:3d} -> guess {attack(templates, traces, sel):3d}")

###############################################################################
# The same device sealed with artificial noise on the attacker's samples.
spec = NoiseSpec(0.0, 3.0, 1.0)
for name, plan in (("none", None), ("ArN", NoisePlan.arn(sel, 20, rng)), ("RnF", NoisePlan.rnf(m))):
    sealed = Device(model, device.device_noise, plan, spec if plan else None)
    wins = [run_trial(k, sealed, sel, 20, 10, rng).success for k in range(0, 256, 16)]
    print(f"{name:>4}: {np.mean(wins):.2f} keys recovered")
