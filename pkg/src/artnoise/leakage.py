"""Secrets, leakage models and synthetic trace generation.

A trace is modelled as ``L = Y(X) + N``: a deterministic, key-dependent
signal plus i.i.d. Gaussian device noise.  Three signal models are provided
(Hamming weight, Hamming distance against a reference state, and the linear
"stochastic" model ``Y(X) = W @ F_b(X)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


def hamming_weight(x: int) -> int:
    """Number of set bits of a non-negative integer."""
    if x < 0:
        raise ValueError(f"hamming_weight needs a non-negative integer, got {x}")
    return int(x).bit_count()


def binary_expand(x: int, B: int) -> np.ndarray:
    """Return ``F_b(x)``: ``[1, bit_0(x), ..., bit_{B-1}(x)]`` as floats.

    Element 0 is the constant 1 (intercept); element ``b`` for ``1 <= b <= B``
    is bit ``b - 1`` of ``x``.
    """
    if not 0 <= x < 2**B:
        raise ValueError(f"key {x} out of range for B={B}")
    out = np.empty(B + 1)
    out[0] = 1.0
    out[1:] = (x >> np.arange(B)) & 1
    return out


def bit_matrix(B: int, keys: Iterable[int] | None = None) -> np.ndarray:
    """Stack ``binary_expand`` rows for ``keys`` (default: all 2**B keys)."""
    keys = np.arange(2**B) if keys is None else np.asarray(list(keys), dtype=np.int64)
    if keys.size and (keys.min() < 0 or keys.max() >= 2**B):
        raise ValueError(f"keys out of range for B={B}")
    out = np.ones((keys.size, B + 1))
    out[:, 1:] = (keys[:, None] >> np.arange(B)) & 1
    return out


@dataclass(frozen=True)
class Secret:
    value: int
    B: int = 8

    def __post_init__(self):
        if not 0 <= self.value < 2**self.B:
            raise ValueError(f"secret {self.value} out of range for B={self.B}")

    @property
    def bits(self) -> np.ndarray:
        return binary_expand(self.value, self.B)


@dataclass(frozen=True, eq=False)
class LeakageModel:
    """Deterministic part ``Y(X)`` of the leakage.

    kind:
        ``"hw"``: ``Y(X) = HW(X) * weights``
        ``"hd"``: ``Y(X) = HW(X ^ reference) * weights``
        ``"linear"``: ``Y(X) = W @ F_b(X)``
    weights:
        Per-sample profile for the HW/HD variants (length ``m``).
    """

    kind: str
    m: int
    B: int
    W: np.ndarray | None = None
    weights: np.ndarray | None = None
    reference: int = 0
    informative: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in ("hw", "hd", "linear"):
            raise ValueError(f"unknown leakage model kind {self.kind!r}")
        if self.kind == "linear":
            if self.W is None or self.W.shape != (self.m, self.B + 1):
                shape = None if self.W is None else self.W.shape
                raise ValueError(f"W must have shape ({self.m}, {self.B + 1}), got {shape}")
        else:
            if self.weights is None or self.weights.shape != (self.m,):
                raise ValueError(f"weights must have length {self.m}")
            if not 0 <= self.reference < 2**self.B:
                raise ValueError("reference state out of range")

    @classmethod
    def hamming_weight(cls, m, B, informative, reference=None):
        """HW (or HD, when ``reference`` is given) model with a 0/1 profile."""
        informative = tuple(sorted(int(i) for i in informative))
        weights = np.zeros(m)
        weights[list(informative)] = 1.0
        if reference is None:
            return cls("hw", m, B, weights=weights, informative=informative)
        return cls("hd", m, B, weights=weights, reference=reference,
                   informative=informative)

    def signal(self, key: int | Secret) -> np.ndarray:
        value = key.value if isinstance(key, Secret) else int(key)
        if isinstance(key, Secret) and key.B != self.B:
            raise ValueError(f"secret has B={key.B}, model has B={self.B}")
        if self.kind == "linear":
            return self.W @ binary_expand(value, self.B)
        if not 0 <= value < 2**self.B:
            raise ValueError(f"key {value} out of range for B={self.B}")
        state = value ^ self.reference if self.kind == "hd" else value
        return hamming_weight(state) * self.weights

    def signals(self, keys: Iterable[int] | None = None) -> np.ndarray:
        """Noiseless traces, one row per key (default: all keys)."""
        keys = range(2**self.B) if keys is None else keys
        if self.kind == "linear":
            return bit_matrix(self.B, keys) @ self.W.T
        return np.array([self.signal(k) for k in keys]).reshape(-1, self.m)


@dataclass(frozen=True)
class DeviceNoise:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"device noise sigma must be > 0, got {self.sigma}")

    @property
    def second_moment(self) -> float:
        return self.sigma**2 + self.mu**2

    def sample(self, rng, size) -> np.ndarray:
        return rng.normal(self.mu, self.sigma, size=size)


@dataclass(frozen=True, eq=False)
class LeakageTrace:
    samples: np.ndarray
    key: Secret


def make_synthetic_model(m: int, B: int, informative_indices, rng, scale: float = 1.0):
    """Linear model with Gaussian coefficients on ``informative_indices`` only."""
    idx = np.unique(np.asarray(list(informative_indices), dtype=np.int64))
    if idx.size == 0:
        raise ValueError("informative_indices is empty: the model would carry no signal")
    if idx.min() < 0 or idx.max() >= m:
        raise ValueError(f"informative indices must lie in [0, {m})")
    W = np.zeros((m, B + 1))
    W[idx] = rng.normal(0.0, scale, size=(idx.size, B + 1))
    return LeakageModel("linear", m, B, W=W, informative=tuple(int(i) for i in idx))


def synth_trace(key: Secret, model: LeakageModel, noise: DeviceNoise, rng) -> LeakageTrace:
    if key.B != model.B:
        raise ValueError(f"secret has B={key.B}, model has B={model.B}")
    samples = model.signal(key) + noise.sample(rng, model.m)
    return LeakageTrace(samples, key)


def synth_traces(key: int, model: LeakageModel, noise: DeviceNoise, n: int, rng) -> np.ndarray:
    """``n`` noisy traces for one key as an ``(n, m)`` array."""
    return model.signal(key) + noise.sample(rng, (n, model.m))


@dataclass(eq=False)
class TraceSet:
    """Traces grouped by key value.

    ``traces[k]`` is an ``(n_k, m)`` array (possibly a lazy memmap of integer
    samples, in which case ``scale`` converts them to real units).
    """

    traces: Mapping[int, np.ndarray]
    m: int
    B: int
    role: str = "profiling"
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ("profiling", "attack", "raw"):
            raise ValueError(f"unknown role {self.role!r}")
        for k, t in self.traces.items():
            if not 0 <= k < 2**self.B:
                raise ValueError(f"key {k} out of range for B={self.B}")
            if t.ndim != 2 or t.shape[1] != self.m:
                raise ValueError(f"traces for key {k} have shape {t.shape}, expected (n, {self.m})")

    @property
    def keys(self) -> list[int]:
        return sorted(self.traces)

    @property
    def counts(self) -> dict[int, int]:
        return {k: self.traces[k].shape[0] for k in self.keys}

    @property
    def complete(self) -> bool:
        return len(self.traces) == 2**self.B and all(self.traces[k].shape[0] for k in self.traces)

    def get(self, key: int) -> np.ndarray:
        t = self.traces[key]
        if self.scale == 1.0 and t.dtype == np.float64:
            return np.asarray(t)
        return np.asarray(t, dtype=np.float64) * self.scale

    def head(self, n: int) -> "TraceSet":
        """First ``n`` traces of every key."""
        return TraceSet({k: self.traces[k][:n] for k in self.keys}, self.m, self.B,
                        self.role, self.scale, dict(self.meta))

    def stats(self):
        """Per-key means, unbiased variances and counts, in key order."""
        keys = self.keys
        means = np.empty((len(keys), self.m))
        variances = np.empty((len(keys), self.m))
        for row, k in enumerate(keys):
            t = self.get(k)
            means[row] = t.mean(axis=0)
            variances[row] = t.var(axis=0, ddof=1) if t.shape[0] > 1 else np.nan
        counts = np.array([self.traces[k].shape[0] for k in keys])
        return means, variances, counts

    def __eq__(self, other):
        if not isinstance(other, TraceSet):
            return NotImplemented
        return (self.m == other.m and self.B == other.B and self.role == other.role
                and self.keys == other.keys
                and all(np.array_equal(self.get(k), other.get(k)) for k in self.keys))


def synth_traceset(model: LeakageModel, noise: DeviceNoise, counts, rng,
                   role: str = "profiling", extra_noise=None) -> TraceSet:
    """Generate a TraceSet.

    counts: int (same count for every key) or mapping key -> count.
    extra_noise: optional callable ``(n, rng) -> (n, m)`` added on top, used to
        model a device with a sealed noise generator.
    """
    if isinstance(counts, int):
        counts = {k: counts for k in range(2**model.B)}
    traces = {}
    for k in sorted(counts):
        t = synth_traces(k, model, noise, counts[k], rng)
        if extra_noise is not None:
            t += extra_noise(counts[k], rng)
        traces[k] = t
    return TraceSet(traces, model.m, model.B, role)
