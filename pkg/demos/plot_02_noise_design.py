"""
Designing the artificial-noise plan
===================================

Given the samples an attacker is expected to use, spend a fixed impulse
budget where it hurts most, and turn the result into a state machine the
noise generator can follow.
"""

import numpy as np

from artnoise import (NoisePlan, NoiseSpec, SelectionSet, f_to_transition, gen_arn,
                      impulse_budget, objective, solve_F)

rng = np.random.default_rng(1)
m = 40
omega_P = SelectionSet.from_indices(m, [3, 4, 9, 15, 22, 23, 31])

###############################################################################
# The budget follows from an energy allowance: each impulse costs
# rho^2 (sigma^2 + mu^2) on average.
spec = NoiseSpec(mu_a=0.5, sigma_a=1.0, rho=1.0, E_A=5.0)
A = impulse_budget(spec, m)
print("impulse energy:", spec.impulse_energy, "budget A:", A)

###############################################################################
# With fewer impulses than selected samples, any A-subset of the selection is
# optimal; with more, the whole selection is covered and the rest is unused.
for budget in (0, A, 20):
    F = solve_F(omega_P, budget, rng)
    print(f"A={budget:2d}: F={list(F.indices)} objective={objective(F, omega_P, spec):.2f}")

###############################################################################
# The plan becomes a chain of states, one per impulse.
plan = NoisePlan.arn(omega_P, A, rng)
G = f_to_transition(plan.F)
print(plan.to_text(), G.to_text(), sep="")

###############################################################################
# Empirical energy per trace against the closed form.
draws = gen_arn(plan, spec, rng, size=50_000)
print("mean energy per trace:", np.mean(np.sum(draws**2, axis=1)), "expected:", plan.expected_energy(spec))
