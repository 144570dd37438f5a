"""Sample-selection compression of leakage traces.

A :class:`SelectionSet` is the index-set form of the sampling matrix ``P``
(``m_c x m``, one 1 per row) and of its diagonal projector ``P_hat = P.T @ P``.
Points of interest are chosen from per-sample scores: difference of means
(DoM, with the k-points-per-clock and "allap" variants), SOST and SNR.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

EPS = 1e-12


@dataclass(frozen=True)
class SelectionSet:
    m: int
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 0 or idx[-1] >= self.m):
            raise ValueError(f"indices must lie in [0, {self.m})")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_indices(cls, m, indices):
        return cls(m, tuple(sorted({int(i) for i in indices})))

    @classmethod
    def full(cls, m):
        return cls(m, tuple(range(m)))

    @classmethod
    def empty(cls, m):
        return cls(m, ())

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return i in set(self.indices)

    def __and__(self, other: "SelectionSet") -> "SelectionSet":
        self._check_m(other)
        return SelectionSet(self.m, tuple(sorted(set(self.indices) & set(other.indices))))

    def __or__(self, other: "SelectionSet") -> "SelectionSet":
        self._check_m(other)
        return SelectionSet(self.m, tuple(sorted(set(self.indices) | set(other.indices))))

    def issubset(self, other: "SelectionSet") -> bool:
        self._check_m(other)
        return set(self.indices) <= set(other.indices)

    def _check_m(self, other):
        if other.m != self.m:
            raise ValueError(f"ambient lengths differ: {self.m} vs {other.m}")

    @property
    def mask(self) -> np.ndarray:
        out = np.zeros(self.m, dtype=bool)
        out[list(self.indices)] = True
        return out

    def matrix(self) -> np.ndarray:
        """Dense sampling matrix ``P`` of shape ``(len(self), m)``."""
        P = np.zeros((len(self), self.m))
        P[np.arange(len(self)), list(self.indices)] = 1.0
        return P

    def projector(self) -> np.ndarray:
        """Dense diagonal ``P_hat = P.T @ P``."""
        return np.diag(self.mask.astype(float))

    def to_text(self) -> str:
        return f"{len(self)}/{self.m}: " + ",".join(map(str, self.indices))

    @classmethod
    def from_text(cls, text: str) -> "SelectionSet":
        match = re.fullmatch(r"\s*(\d+)/(\d+):\s*([\d,\s]*)", text)
        if not match:
            raise ValueError(f"malformed selection text: {text!r}")
        n, m, body = int(match[1]), int(match[2]), match[3].strip()
        idx = tuple(int(tok) for tok in body.split(",")) if body else ()
        if len(idx) != n:
            raise ValueError(f"selection text announces {n} indices but lists {len(idx)}")
        return cls(m, idx)

    def __str__(self):
        return self.to_text()


def compress(trace, sel: SelectionSet) -> np.ndarray:
    """Gather ``sel.indices`` from the last axis, i.e. ``P @ L``.

    Accepts a single trace, an ``(n, m)`` batch or a ``LeakageTrace``.
    """
    samples = getattr(trace, "samples", trace)
    samples = np.asarray(samples)
    if samples.shape[-1] != sel.m:
        raise ValueError(f"trace length {samples.shape[-1]} != selection ambient length {sel.m}")
    return samples[..., list(sel.indices)]


# -- scoring ---------------------------------------------------------------

def _moments(profiling):
    if isinstance(profiling, tuple):
        means, variances, counts = profiling
        return np.asarray(means, float), np.asarray(variances, float), np.asarray(counts)
    return profiling.stats()


def dom_scores(profiling) -> np.ndarray:
    """Largest absolute difference between per-key mean traces, per sample.

    ``profiling`` is a TraceSet or a ``(means, variances, counts)`` tuple.
    """
    means, _, _ = _moments(profiling)
    if means.shape[0] < 2:
        raise ValueError("difference of means needs at least two distinct keys")
    # max over pairs of |a - b| is max - min
    return means.max(axis=0) - means.min(axis=0)


def sost_scores(profiling) -> np.ndarray:
    """Sum over key pairs of squared Welch t-statistics, per sample."""
    means, variances, counts = _moments(profiling)
    if means.shape[0] < 2:
        raise ValueError("SOST needs at least two distinct keys")
    if np.any(counts < 2):
        raise ValueError("SOST needs at least two traces per key")
    v = variances / counts[:, None]
    scores = np.zeros(means.shape[1])
    for i in range(means.shape[0] - 1):
        diff = means[i] - means[i + 1:]
        den = np.maximum(v[i] + v[i + 1:], EPS)
        scores += (diff**2 / den).sum(axis=0)
    return scores


def snr_scores(profiling) -> np.ndarray:
    """Variance of the per-key means over the mean per-key variance."""
    means, variances, counts = _moments(profiling)
    if means.shape[0] < 2:
        raise ValueError("SNR needs at least two distinct keys")
    if np.any(counts < 2):
        raise ValueError("SNR needs at least two traces per key")
    return means.var(axis=0) / np.maximum(variances.mean(axis=0), EPS)


# -- selection -------------------------------------------------------------

@dataclass(frozen=True)
class CompressionMethod:
    """One of ``dom`` (k points per clock), ``allap``, ``sost`` or ``snr``."""

    kind: str
    points_per_clock: int = 1
    clock_len: int = 1
    threshold: float = 0.1
    count: int = 1

    def __post_init__(self):
        if self.kind not in ("dom", "allap", "sost", "snr"):
            raise ValueError(f"unknown compression method {self.kind!r}")
        if self.kind == "dom":
            if self.points_per_clock < 1 or self.clock_len < 1:
                raise ValueError("points_per_clock and clock_len must be >= 1")
            if self.points_per_clock > self.clock_len:
                raise ValueError(f"{self.points_per_clock} points per clock exceeds "
                                 f"clock_len={self.clock_len}")
        if self.kind in ("sost", "snr") and self.count < 1:
            raise ValueError("count must be >= 1")
        if self.kind == "allap" and not 0 <= self.threshold < 1:
            raise ValueError("allap threshold fraction must be in [0, 1)")

    @classmethod
    def parse(cls, text: str, clock_len: int = 1) -> "CompressionMethod":
        """Parse ``"3ppc"``, ``"allap"``, ``"allap:0.2"``, ``"sost:20"``, ``"snr:20"``."""
        t = text.strip().lower()
        if m := re.fullmatch(r"(\d+)ppc", t):
            return cls("dom", points_per_clock=int(m[1]), clock_len=clock_len)
        if m := re.fullmatch(r"allap(?::([\d.eE+-]+))?", t):
            return cls("allap", threshold=float(m[1]) if m[1] else 0.1)
        if m := re.fullmatch(r"(sost|snr):(\d+)", t):
            return cls(m[1], count=int(m[2]))
        raise ValueError(f"unrecognised compression method {text!r}")

    @property
    def name(self) -> str:
        if self.kind == "dom":
            return f"{self.points_per_clock}ppc"
        if self.kind == "allap":
            return "allap" if self.threshold == 0.1 else f"allap:{self.threshold:g}"
        return f"{self.kind}:{self.count}"

    def scores(self, profiling) -> np.ndarray:
        if self.kind == "sost":
            return sost_scores(profiling)
        if self.kind == "snr":
            return snr_scores(profiling)
        return dom_scores(profiling)


def select_from_scores(method: CompressionMethod, scores) -> SelectionSet:
    scores = np.asarray(scores, dtype=float)
    m = scores.size
    if method.kind == "dom":
        floor = 2.0 * np.median(scores)
        chosen = []
        for start in range(0, m, method.clock_len):
            window = scores[start:start + method.clock_len]
            if window.max() <= floor:
                continue
            # stable sort: ties go to the earlier sample, which keeps k-ppc nested
            order = np.argsort(-window, kind="stable")[:method.points_per_clock]
            chosen.extend(start + order)
        diag = f"no clock window of {method.clock_len} samples rises above 2x median score {floor:.3g}"
    elif method.kind == "allap":
        cut = method.threshold * scores.max()
        chosen = np.flatnonzero(scores > cut)
        diag = f"no sample scores above {method.threshold} x max score ({scores.max():.3g})"
    else:
        if method.count > m:
            raise ValueError(f"cannot select {method.count} samples from traces of length {m}")
        chosen = np.argsort(-scores, kind="stable")[:method.count]
        diag = "no samples"
    if len(chosen) == 0:
        raise ValueError(f"{method.name} selected nothing: {diag}")
    return SelectionSet.from_indices(m, chosen)


def select(method: CompressionMethod, profiling) -> SelectionSet:
    """Points of interest chosen by ``method`` on a profiling TraceSet."""
    return select_from_scores(method, method.scores(profiling))
