"""Stochastic-model profiling and Gaussian template attack.

Profiling fits ``mean_trace(k) ~= W_hat @ F_b(k)`` by least squares over the
compressed samples; templates share one pooled covariance; the attack sums
Gaussian log-likelihoods over the attack traces and returns the argmax key.
"""
from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .compression import SelectionSet, compress
from .device import Device
from .leakage import Secret, TraceSet, bit_matrix


@dataclass(frozen=True, eq=False)
class ProfiledModel:
    W_hat: np.ndarray
    sel: SelectionSet
    B: int

    def __post_init__(self):
        if self.W_hat.shape != (len(self.sel), self.B + 1):
            raise ValueError(f"W_hat has shape {self.W_hat.shape}, expected "
                             f"({len(self.sel)}, {self.B + 1})")

    def means(self, keys=None) -> np.ndarray:
        return bit_matrix(self.B, keys) @ self.W_hat.T


def profile(profiling: TraceSet, sel: SelectionSet) -> ProfiledModel:
    """Least-squares estimate of the leakage coefficients on ``sel``."""
    if sel.m != profiling.m:
        raise ValueError(f"selection covers {sel.m} samples, traces have {profiling.m}")
    keys = [k for k in profiling.keys if profiling.counts[k] > 0]
    design = bit_matrix(profiling.B, keys)
    if np.linalg.matrix_rank(design) < profiling.B + 1:
        raise ValueError(f"{len(keys)} profiling keys give a rank-deficient design; "
                         f"need bit vectors spanning {profiling.B + 1} dimensions")
    means = np.array([compress(profiling.get(k), sel).mean(axis=0) for k in keys])
    coef, *_ = np.linalg.lstsq(design, means, rcond=None)
    return ProfiledModel(coef.T.copy(), sel, profiling.B)


@dataclass(frozen=True, eq=False)
class Template:
    key: Secret
    mean: np.ndarray
    covariance: np.ndarray


class TemplateSet(Sequence):
    """All ``2**B`` templates sharing one pooled covariance."""

    def __init__(self, means, covariance, B, sel=None):
        self.means = np.asarray(means, dtype=float)
        self.covariance = np.asarray(covariance, dtype=float)
        self.B = B
        self.sel = sel
        cho = linalg.cho_factor(self.covariance)
        self._lam_mu = linalg.cho_solve(cho, self.means.T).T
        self._quad = np.einsum("ij,ij->i", self.means, self._lam_mu)

    def __len__(self):
        return self.means.shape[0]

    def __getitem__(self, k):
        if isinstance(k, slice):
            return [self[i] for i in range(len(self))[k]]
        return Template(Secret(int(k), self.B), self.means[k], self.covariance)

    def scores(self, compressed) -> np.ndarray:
        """Per-key log-likelihood summed over traces, up to a key-independent constant."""
        X = np.atleast_2d(compressed)
        return self._lam_mu @ X.sum(axis=0) - 0.5 * X.shape[0] * self._quad


def build_templates(model: ProfiledModel, profiling: TraceSet, eps: float = 1e-6) -> TemplateSet:
    """Per-key means from ``model``; covariance pooled over all residuals.

    The covariance is regularised by ``eps * mean(diag)`` (floored at 1e-12)
    on the diagonal so it is always positive definite.
    """
    sel = model.sel
    m_c = len(sel)
    scatter = np.zeros((m_c, m_c))
    total = 0
    for k in profiling.keys:
        X = compress(profiling.get(k), sel)
        if X.shape[0] == 0:
            continue
        R = X - model.means([k])[0]
        scatter += R.T @ R
        total += X.shape[0]
    if total < m_c + 1:
        warnings.warn(f"{total} profiling traces for {m_c} samples: pooled covariance is singular",
                      RuntimeWarning, stacklevel=2)
    cov = scatter / max(total, 1)
    ridge = max(eps * float(np.mean(np.diag(cov))), 1e-12)
    cov[np.diag_indices(m_c)] += ridge
    return TemplateSet(model.means(), cov, model.B, sel)


def attack(templates: TemplateSet, attack_traces, sel: SelectionSet) -> int:
    """Maximum-likelihood key; ties go to the lowest key value."""
    traces = np.asarray(attack_traces, dtype=float)
    if traces.size == 0:
        raise ValueError("attack needs at least one trace")
    X = compress(np.atleast_2d(traces), sel)
    return int(np.argmax(templates.scores(X)))


@dataclass(frozen=True)
class AttackOutcome:
    true_key: int
    guessed_key: int
    traces_used: int
    noise_energy: float

    @property
    def success(self) -> bool:
        return self.guessed_key == self.true_key


def run_trial(true_key: int, device: Device, sel_attacker: SelectionSet,
              I_p: int, I_a: int, rng, noisy_profiling: bool = True) -> AttackOutcome:
    """Profile a device, attack ``I_a`` fresh traces of ``true_key``, report.

    With ``noisy_profiling`` the profiling traces come from the sealed device
    (noise generator active); otherwise from the bare device.
    """
    prof_device = device if noisy_profiling else Device(device.model, device.device_noise)
    profiling = prof_device.traceset(I_p, rng)
    model = profile(profiling, sel_attacker)
    templates = build_templates(model, profiling)
    traces, energy = device.capture(true_key, I_a, rng)
    guess = attack(templates, traces, sel_attacker)
    return AttackOutcome(int(true_key), guess, I_a, energy)
