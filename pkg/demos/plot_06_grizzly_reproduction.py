"""
Reproduction on the Grizzly traces
==================================

Needs the recorded dataset: 256 keys x 3072 traces x 2500 int16 samples,
either as a raw little-endian file or as ``.npy``.  Usage::

    python demos/plot_06_grizzly_reproduction.py /path/to/grizzly.raw [clock_len]

This takes a long time (all 256 keys, 100 trials each, 500 attack traces).
"""

import sys
from dataclasses import replace

from artnoise.experiment import ExperimentConfig, render_table, run_experiment

if len(sys.argv) < 2:
    sys.exit(__doc__)
path = sys.argv[1]
clock = int(sys.argv[2]) if len(sys.argv) > 2 else 25

###############################################################################
# Half of each key's traces profile, the other half are the attack pool.
# The design phase sees 1000 raw traces per key and calibrates the noise
# generator from key 0.
base = ExperimentConfig(dataset=path, dataset_format="grizzly-adapter", n_profiling_split=1536,
                        m=2500, clock_len=clock, design_traces=1000, I_p=500, I_a=500,
                        N_T=100, full_keys=True, A=150, rho=1.0)

###############################################################################
# Baselines with an allap attacker, then ArN with (20ppc, 20ppc).
rows = run_experiment(replace(base, s_d="allap", s_a="allap", schemes=("OA", "RnF")))
rows += run_experiment(replace(base, s_d="20ppc", s_a="20ppc", schemes=("ArN",)))
print(render_table(rows))
