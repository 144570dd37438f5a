"""Energy-constrained design of impulsive artificial noise.

The generator emits ``rho * F @ N_a`` where ``F`` is a diagonal 0/1 selection
matrix (stored as a :class:`SelectionSet`) and ``N_a ~ N(mu_a, sigma_a^2 I)``.
Under an impulse budget ``A`` the capacity of the compressed side channel is
minimised by putting every impulse on a sample the attacker keeps:

* ``|Omega_P| <= A``: ``F* = P_hat``
* ``|Omega_P| >  A``: any ``A``-subset of ``Omega_P`` (drawn once, then frozen)

The chosen ``F`` is stored in the generator's control module as a
deterministic state-transition matrix (:class:`TransitionMatrix`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compression import SelectionSet

SCHEMES = ("ArN", "RnF", "RnP")


@dataclass(frozen=True)
class NoiseSpec:
    mu_a: float = 0.0
    sigma_a: float = 1.0
    rho: float = 1.0
    E_A: float = 0.0

    def __post_init__(self):
        if not self.sigma_a > 0:
            raise ValueError(f"sigma_a must be > 0, got {self.sigma_a}")
        if not self.rho > 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if self.E_A < 0:
            raise ValueError(f"E_A must be >= 0, got {self.E_A}")

    @property
    def second_moment(self) -> float:
        """``E[n^2]`` of one source sample (before the gain)."""
        return self.sigma_a**2 + self.mu_a**2

    @property
    def impulse_energy(self) -> float:
        """Expected energy of one injected impulse, ``rho^2 E[n^2]``."""
        return self.rho**2 * self.second_moment


def impulse_budget(spec: NoiseSpec, m: int) -> int:
    """Largest impulse count whose expected energy stays within ``spec.E_A``.

    ``A = m E_A / (rho^2 Tr E[N_a N_a^T])`` with ``Tr E[N_a N_a^T] = m E[n^2]``,
    rounded down.
    """
    trace = m * spec.second_moment
    budget = m * spec.E_A / (spec.rho**2 * trace)
    # absorb float error such as 4.999999999 for an exact ratio of 5
    return max(0, math.floor(budget + 1e-9))


def solve_F(omega_P: SelectionSet, A: int, rng) -> SelectionSet:
    """Optimal impulse support under ``Rank(F) <= A``."""
    if A < 0:
        raise ValueError(f"impulse budget must be >= 0, got {A}")
    if len(omega_P) <= A:
        return omega_P
    picked = rng.choice(np.asarray(omega_P.indices, dtype=np.int64), size=A, replace=False)
    return SelectionSet.from_indices(omega_P.m, picked)


def objective(F: SelectionSet, omega_P: SelectionSet, spec: NoiseSpec) -> float:
    """Injected energy seen by the attacker, ``rho^2 Tr(E[Delta N_a N_a^T])``.

    ``Delta = F.T @ P_hat @ F`` is diagonal with support ``Omega_F & Omega_P``,
    so the trace is ``|Omega_F & Omega_P| * rho^2 * (sigma_a^2 + mu_a^2)``.
    """
    return len(F & omega_P) * spec.impulse_energy


@dataclass(frozen=True)
class NoisePlan:
    """A frozen noise-injection design.

    For ``RnP`` the support ``F`` only fixes the impulse count; the positions
    are redrawn for every trace.
    """

    F: SelectionSet
    A: int
    scheme: str = "ArN"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown noise scheme {self.scheme!r}")
        if self.scheme == "RnF" and len(self.F) != self.F.m:
            raise ValueError("an RnF plan must cover every sample")
        if self.scheme != "RnF" and len(self.F) > self.A:
            raise ValueError(f"plan uses {len(self.F)} impulses, budget is {self.A}")

    @property
    def m(self) -> int:
        return self.F.m

    @property
    def count(self) -> int:
        return len(self.F)

    @classmethod
    def arn(cls, omega_P: SelectionSet, A: int, rng) -> "NoisePlan":
        return cls(solve_F(omega_P, A, rng), A, "ArN")

    @classmethod
    def rnf(cls, m: int) -> "NoisePlan":
        return cls(SelectionSet.full(m), m, "RnF")

    @classmethod
    def rnp(cls, matched: "NoisePlan") -> "NoisePlan":
        """RnP plan injecting as many impulses as ``matched`` (an ArN plan)."""
        return cls(matched.F, matched.A, "RnP")

    def expected_energy(self, spec: NoiseSpec) -> float:
        """Expected energy injected into one trace."""
        return self.count * spec.impulse_energy

    def to_text(self) -> str:
        return f"scheme: {self.scheme}\nA: {self.A}\nF: {self.F.to_text()}\n"

    @classmethod
    def from_text(cls, text: str) -> "NoisePlan":
        fields = _parse_fields(text, ("scheme", "A", "F"))
        return cls(SelectionSet.from_text(fields["F"]), int(fields["A"]), fields["scheme"])


def _parse_fields(text, names):
    fields = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        name, sep, value = line.partition(":")
        if not sep:
            raise ValueError(f"malformed line {line!r}")
        fields[name.strip()] = value.strip()
    missing = [n for n in names if n not in fields]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    return fields


@dataclass(frozen=True)
class TransitionMatrix:
    """Deterministic impulse schedule of the control module.

    ``states[i]`` is the prefix ``F_d[0 : p_i + 1]`` of the selection diagonal
    ending at the ``i``-th impulse position ``p_i``; state ``i`` moves to state
    ``i + 1`` with probability 1 and the last state is absorbing.
    """

    m: int
    states: tuple[tuple[int, ...], ...]
    transitions: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def positions(self) -> tuple[int, ...]:
        return tuple(len(s) - 1 for s in self.states)

    def to_selection(self) -> SelectionSet:
        return SelectionSet(self.m, self.positions)

    def to_dense(self) -> np.ndarray:
        G = np.zeros((self.n, self.n))
        for (i, j), beta in self.transitions.items():
            G[i, j] = beta
        return G

    def to_text(self) -> str:
        states = ", ".join("".join(map(str, s)) for s in self.states)
        pairs = ", ".join(f"{i}->{j}" for i, j in sorted(self.transitions))
        return f"m: {self.m}\nn: {self.n}\nstates: {states}\ntransitions: {pairs}\n"

    @classmethod
    def from_text(cls, text: str) -> "TransitionMatrix":
        fields = _parse_fields(text, ("m", "n", "states", "transitions"))
        states = tuple(tuple(int(c) for c in tok.strip())
                       for tok in fields["states"].split(",") if tok.strip())
        transitions = {}
        for tok in fields["transitions"].split(","):
            if tok.strip():
                i, j = tok.split("->")
                transitions[(int(i), int(j))] = 1
        if len(states) != int(fields["n"]):
            raise ValueError("state count does not match n")
        return cls(int(fields["m"]), states, transitions)


def f_to_transition(F: SelectionSet) -> TransitionMatrix:
    """Translate the selection diagonal into the chain of impulse states."""
    diag = F.mask.astype(int)
    states = tuple(tuple(diag[:i + 1]) for i in range(F.m) if diag[i])
    transitions = {(i, i + 1): 1 for i in range(len(states) - 1)}
    return TransitionMatrix(F.m, tuple(tuple(int(v) for v in s) for s in states), transitions)


# -- generators ------------------------------------------------------------

def gen_arn(plan: NoisePlan, spec: NoiseSpec, rng, size: int | None = None) -> np.ndarray:
    """``rho * F @ N_a``: impulses on the frozen support only."""
    if plan.scheme != "ArN":
        raise ValueError(f"gen_arn needs an ArN plan, got {plan.scheme}")
    shape = (plan.m,) if size is None else (size, plan.m)
    out = np.zeros(shape)
    idx = list(plan.F.indices)
    out[..., idx] = spec.rho * rng.normal(spec.mu_a, spec.sigma_a, size=shape[:-1] + (len(idx),))
    return out


def gen_rnf(m: int, spec: NoiseSpec, rng, size: int | None = None) -> np.ndarray:
    """Gaussian noise on every sample, scaled by ``rho``."""
    shape = (m,) if size is None else (size, m)
    return spec.rho * rng.normal(spec.mu_a, spec.sigma_a, size=shape)


def gen_rnp(m: int, count: int, spec: NoiseSpec, rng, size: int | None = None) -> np.ndarray:
    """Noise on a fresh uniformly random ``count``-subset of samples per trace."""
    if not 0 <= count <= m:
        raise ValueError(f"cannot place {count} impulses in {m} samples")
    n = 1 if size is None else size
    out = np.zeros((n, m))
    if count:
        if count == m:
            pos = np.broadcast_to(np.arange(m), (n, m))
        else:
            pos = np.argpartition(rng.random((n, m)), count - 1, axis=1)[:, :count]
        vals = spec.rho * rng.normal(spec.mu_a, spec.sigma_a, size=(n, count))
        np.put_along_axis(out, pos, vals, axis=1)
    return out[0] if size is None else out


def sampler(plan: NoisePlan | None, spec: NoiseSpec):
    """Return ``f(n, rng) -> (n, m)`` drawing noise for ``n`` traces, or None."""
    if plan is None:
        return None
    if plan.scheme == "ArN":
        return lambda n, rng: gen_arn(plan, spec, rng, size=n)
    if plan.scheme == "RnF":
        return lambda n, rng: gen_rnf(plan.m, spec, rng, size=n)
    return lambda n, rng: gen_rnp(plan.m, plan.count, spec, rng, size=n)
