"""Side-channel SNR and capacity.

The leakage channel is treated as an additive noise channel with capacity
``C = 1/2 log(1 + |Y|^2 / E|N|^2)``.  Noise energies are computed from the
first two moments (``sigma^2 + mu^2`` per sample), never sampled.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from .compression import SelectionSet, compress
from .leakage import DeviceNoise
from .noise import NoisePlan, NoiseSpec, objective


@dataclass(frozen=True)
class CapacityReport:
    signal_energy: float
    device_noise_energy: float
    injected_noise_energy: float
    snr: float
    capacity_bits: float

    @classmethod
    def from_energies(cls, signal, device, injected=0.0, base=2.0):
        total = device + injected
        snr = signal / total if total > 0 else math.inf
        return cls(float(signal), float(device), float(injected), float(snr),
                   capacity(snr, base))

    def as_row(self) -> dict:
        return asdict(self)


def capacity(snr: float, base: float = 2.0) -> float:
    return 0.5 * math.log1p(snr) / math.log(base)


def _signal_energy(signal, per_key: bool):
    """``|Y|^2`` of a single trace, or per key / averaged for a key-by-sample matrix."""
    signal = np.asarray(signal, dtype=float)
    energy = np.sum(signal**2, axis=-1)
    if signal.ndim == 1 or per_key:
        return energy
    return float(energy.mean())


def raw_capacity(signal, device_noise: DeviceNoise, base: float = 2.0,
                 per_key: bool = False):
    """Capacity of the uncompressed, undefended channel.

    ``signal`` may be one noiseless trace or a ``(keys, m)`` matrix; in the
    latter case the signal energy is averaged over keys unless ``per_key``.
    """
    return noised_capacity(signal, device_noise, 0.0, base, per_key)


def noised_capacity(signal, device_noise: DeviceNoise, extra_energy: float,
                    base: float = 2.0, per_key: bool = False):
    """Capacity with ``extra_energy`` of independent noise added per trace."""
    if extra_energy < 0:
        raise ValueError("extra_energy must be >= 0")
    signal = np.asarray(signal, dtype=float)
    m = signal.shape[-1]
    if m == 0:
        raise ValueError("signal has no samples")
    device = m * device_noise.second_moment
    energy = _signal_energy(signal, per_key)
    if np.ndim(energy):
        return [CapacityReport.from_energies(e, device, extra_energy, base) for e in energy]
    return CapacityReport.from_energies(energy, device, extra_energy, base)


def injected_energy(plan: NoisePlan | None, sel: SelectionSet, spec: NoiseSpec) -> float:
    """Expected injected energy that survives compression by ``sel``."""
    if plan is None:
        return 0.0
    if plan.m != sel.m:
        raise ValueError(f"plan covers {plan.m} samples, selection {sel.m}")
    if plan.scheme == "RnP":
        # random support: each kept sample is hit with probability count / m
        return plan.count * len(sel) / plan.m * spec.impulse_energy
    return objective(plan.F, sel, spec)


def compressed_capacity(signal, sel: SelectionSet, plan: NoisePlan | None, spec: NoiseSpec,
                        device_noise: DeviceNoise, base: float = 2.0, per_key: bool = False):
    """Capacity of the compressed channel with the plan's noise injected."""
    signal = np.asarray(signal, dtype=float)
    if signal.shape[-1] != sel.m:
        raise ValueError(f"signal length {signal.shape[-1]} != selection ambient length {sel.m}")
    energy = _signal_energy(compress(signal, sel), per_key)
    device = len(sel) * device_noise.second_moment
    injected = injected_energy(plan, sel, spec)
    if np.ndim(energy):
        return [CapacityReport.from_energies(e, device, injected, base) for e in energy]
    return CapacityReport.from_energies(energy, device, injected, base)


def mutual_information_mc(signals, sigma: float, n: int, rng, base: float = 2.0) -> float:
    """Monte-Carlo estimate of ``I(L; X)`` for a uniform secret.

    ``L = signals[X] + N`` with ``N ~ N(0, sigma^2 I)``.  Uses
    ``I = E[log p(L|X) - log mean_k p(L|k)]``.
    """
    signals = np.atleast_2d(np.asarray(signals, dtype=float))
    K = signals.shape[0]
    x = rng.integers(0, K, size=n)
    L = signals[x] + rng.normal(0.0, sigma, size=(n, signals.shape[1]))
    # squared distances to every candidate mean, (n, K)
    d2 = ((L[:, None, :] - signals[None, :, :]) ** 2).sum(axis=-1)
    loglik = -d2 / (2 * sigma**2)
    mi_nats = np.mean(loglik[np.arange(n), x] - (logsumexp(loglik, axis=1) - math.log(K)))
    return float(mi_nats / math.log(base))
