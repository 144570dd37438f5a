"""A simulated device: leakage model + device noise + sealed noise generator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .leakage import DeviceNoise, LeakageModel, TraceSet, synth_traces
from .noise import NoisePlan, NoiseSpec, sampler


@dataclass(frozen=True, eq=False)
class Device:
    model: LeakageModel
    device_noise: DeviceNoise
    plan: NoisePlan | None = None
    spec: NoiseSpec | None = None

    def __post_init__(self):
        if self.plan is not None:
            if self.spec is None:
                raise ValueError("a noise plan needs a NoiseSpec")
            if self.plan.m != self.model.m:
                raise ValueError(f"plan covers {self.plan.m} samples, model emits {self.model.m}")

    def capture(self, key: int, n: int, rng) -> tuple[np.ndarray, float]:
        """``n`` traces under ``key`` and the total injected noise energy."""
        traces = synth_traces(key, self.model, self.device_noise, n, rng)
        draw = sampler(self.plan, self.spec)
        if draw is None:
            return traces, 0.0
        injected = draw(n, rng)
        traces += injected
        return traces, float(np.sum(injected**2))

    def traceset(self, counts, rng, role: str = "profiling", keys=None) -> TraceSet:
        keys = range(2**self.model.B) if keys is None else keys
        if isinstance(counts, int):
            counts = {k: counts for k in keys}
        traces = {k: self.capture(k, counts[k], rng)[0] for k in sorted(counts)}
        return TraceSet(traces, self.model.m, self.model.B, role)
