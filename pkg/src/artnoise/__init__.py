"""Energy-efficient artificial noise against power side-channel attacks.

Synthetic leakage, sample-selection compression, the capacity-minimising
impulse design, stochastic-model template attacks and the SRR / EE
evaluation harness.
"""
from .channel import (CapacityReport, compressed_capacity, mutual_information_mc, noised_capacity,
                      raw_capacity)
from .compression import (CompressionMethod, SelectionSet, compress, dom_scores, select,
                          snr_scores, sost_scores)
from .datasets import Dataset, ingest
from .device import Device
from .leakage import (DeviceNoise, LeakageModel, LeakageTrace, Secret, TraceSet,
                      binary_expand, hamming_weight, make_synthetic_model, synth_trace,
                      synth_traceset)
from .metrics import ee, ee_avg, srr
from .noise import (NoisePlan, NoiseSpec, TransitionMatrix, f_to_transition, gen_arn,
                    gen_rnf, gen_rnp, impulse_budget, objective, solve_F)
from .template import AttackOutcome, attack, build_templates, profile, run_trial

__version__ = "0.1.0"
