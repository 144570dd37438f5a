"""Successful recovery rate and energy efficiency of noise schemes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


def normalized_energy(noise_energy: float, n_tests: int, m: int, sigma2: float) -> float:
    """``noise_energy / (N_T * m * sigma^2)``."""
    return noise_energy / (n_tests * m * sigma2)


def ee(success: bool, noise_energy: float, n_tests: int, m: int, sigma2: float) -> float:
    """Attack-success reduction per unit of normalised noise energy.

    Zero when the key was recovered.  A failed attack against a device that
    injected no noise has no efficiency to speak of: returns NaN.
    """
    if success:
        return 0.0
    if noise_energy <= 0:
        return math.nan
    return 1.0 / normalized_energy(noise_energy, n_tests, m, sigma2)


def _success(o) -> bool:
    return bool(getattr(o, "success", o))


def _check(outcomes: Mapping[int, Sequence], keys):
    if keys is not None:
        missing = sorted(set(keys) - set(outcomes))
        if missing:
            raise ValueError(f"no outcomes for keys {missing[:10]}{'...' if len(missing) > 10 else ''}")
    empty = [k for k, v in outcomes.items() if len(v) == 0]
    if empty or not outcomes:
        raise ValueError(f"keys without any outcome: {empty[:10]}")


def srr(outcomes: Mapping[int, Sequence], keys=None) -> float:
    """Mean over keys of the per-key hit rate ``N_hit(k) / N_T``.

    ``outcomes[k]`` holds booleans or objects with a ``success`` attribute.
    """
    _check(outcomes, keys)
    return float(np.mean([np.mean([_success(o) for o in v]) for v in outcomes.values()]))


def ee_avg(outcomes: Mapping[int, Sequence], n_tests: int, m: int, sigma2: float,
           keys=None) -> float:
    """Mean over keys of the mean per-trial EE (``AttackOutcome`` entries)."""
    _check(outcomes, keys)
    per_key = [np.mean([ee(o.success, o.noise_energy, n_tests, m, sigma2) for o in v])
               for v in outcomes.values()]
    return float(np.mean(per_key))


@dataclass(frozen=True)
class ExperimentStats:
    srr: float
    ee_avg: float
    per_key_success: dict
    n_tests: int
    total_normalized_energy: float


def summarize(outcomes: Mapping[int, Sequence], n_tests: int, m: int, sigma2: float,
              keys=None) -> ExperimentStats:
    _check(outcomes, keys)
    total = sum(o.noise_energy for v in outcomes.values() for o in v)
    return ExperimentStats(
        srr=srr(outcomes),
        ee_avg=ee_avg(outcomes, n_tests, m, sigma2),
        per_key_success={k: sum(o.success for o in v) for k, v in sorted(outcomes.items())},
        n_tests=n_tests,
        total_normalized_energy=normalized_energy(total, n_tests, m, sigma2),
    )
