"""Experiment harness: design phase, attack trials, sweeps and reports.

Every random draw comes from a generator seeded by
``SeedSequence(master_seed, spawn_key=(stream, point, ...))`` so results do
not depend on evaluation order.  Device noise and injected noise use
separate streams; for a given sweep point, key and trial every scheme sees
the same device noise.
"""
from __future__ import annotations

import configparser
import csv
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import channel
from .compression import CompressionMethod, SelectionSet, select
from .datasets import Dataset, ingest
from .leakage import DeviceNoise, LeakageModel, TraceSet, make_synthetic_model, synth_traces
from .metrics import ee_avg, srr
from .noise import NoisePlan, NoiseSpec, TransitionMatrix, f_to_transition, impulse_budget, sampler
from .template import AttackOutcome, attack, build_templates, profile

log = logging.getLogger(__name__)

SCHEMES = ("OA", "RnF", "RnP", "ArN")
SWEEPS = ("none", "A", "I_a", "rho", "methods")

# seed streams
_MODEL, _DESIGN, _PLAN, _PROF, _PROF_NOISE, _ATT, _ATT_NOISE = range(7)


def rng_for(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass
class ExperimentConfig:
    """All knobs of an experiment; every field is also a config-file key."""

    # leakage source: synthetic unless ``dataset`` is set
    dataset: str | None = None
    dataset_format: str = "canonical-text"
    n_profiling_split: int | None = None
    B: int = 8
    m: int = 200
    n_informative: int = 20
    coef_scale: float = 1.0
    mu_N: float = 0.0
    sigma_N: float = 3.0
    # compression
    clock_len: int = 10
    s_d: str = "snr:20"
    s_a: str = "snr:20"
    design_traces: int = 50
    # noise
    schemes: tuple = SCHEMES
    rho: float = 1.0
    rnf_rho: float = 1.0
    E_A: float | None = None
    A: int | None = 20
    mu_a: float | None = None
    sigma_a: float | None = None
    noisy_profiling: bool = True
    # attack protocol
    I_p: int = 20
    I_a: int = 10
    N_T: int = 20
    n_keys: int = 32
    full_keys: bool = False
    seed: int = 0
    # sweep
    sweep: str = "none"
    sweep_values: tuple = ()
    method_pairs: tuple = ()
    out_dir: str = "results"

    def __post_init__(self):
        self.schemes = tuple(self.schemes)
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ValueError(f"unknown schemes {bad}; choose from {SCHEMES}")
        if self.sweep not in SWEEPS:
            raise ValueError(f"sweep must be one of {SWEEPS}")
        if self.N_T < 1 or self.I_a < 1 or self.I_p < 1:
            raise ValueError("N_T, I_a and I_p must be >= 1")
        if self.n_keys < 1:
            raise ValueError("n_keys must be >= 1")
        if self.A is None and self.E_A is None:
            raise ValueError("set either A or E_A")
        for name in (self.s_d, self.s_a, *[x for p in self.method_pairs for x in p]):
            CompressionMethod.parse(name, self.clock_len)

    @property
    def attack_keys(self) -> list[int]:
        K = 2**self.B
        if self.full_keys or self.n_keys >= K:
            return list(range(K))
        return [int(k) for k in np.linspace(0, K, self.n_keys, endpoint=False)]

    def method(self, name: str) -> CompressionMethod:
        return CompressionMethod.parse(name, self.clock_len)


# -- config files ------------------------------------------------------------

def _convert(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ValueError(f"unknown config key {name!r}")
    raw = raw.strip()
    kind = kinds[name]
    if raw.lower() in ("", "none") and "None" in kind:
        return None
    if name == "schemes":
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if name == "sweep_values":
        return tuple(float(v) if "." in v else int(v) for v in (s.strip() for s in raw.split(",")) if v)
    if name == "method_pairs":
        return tuple(tuple(p.strip().split("/")) for p in raw.split(",") if p.strip())
    if kind.startswith("bool"):
        if raw.lower() not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
            raise ValueError(f"{name}: expected a boolean, got {raw!r}")
        return raw.lower() in ("true", "1", "yes", "on")
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments) and apply overrides."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        parser.optionxform = str
        parser.read_string("[experiment]\n" + Path(path).read_text(), source=str(path))
        values = {k: _convert(k, v) for k, v in parser["experiment"].items()}
    for k, v in (overrides or {}).items():
        values[k] = _convert(k, v) if isinstance(v, str) else v
    return ExperimentConfig(**values)


# -- leakage sources -------------------------------------------------------

class SyntheticSource:
    def __init__(self, model: LeakageModel, device_noise: DeviceNoise):
        self.model, self.device_noise = model, device_noise
        self.m, self.B = model.m, model.B

    def profiling(self, key, n, rng):
        return synth_traces(key, self.model, self.device_noise, n, rng)

    def attack(self, key, n, rng):
        return synth_traces(key, self.model, self.device_noise, n, rng)


class DatasetSource:
    """Replays recorded traces; attack traces are drawn at random per trial."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.m, self.B = dataset.profiling.m, dataset.profiling.B
        self.model = None
        self.device_noise = None

    def profiling(self, key, n, rng):
        t = self.dataset.profiling.get(key)
        if n > t.shape[0]:
            raise ValueError(f"key {key}: {n} profiling traces requested, {t.shape[0]} recorded")
        return t[:n].copy()

    def attack(self, key, n, rng):
        pool = self.dataset.attack.traces[key]
        idx = np.sort(rng.choice(pool.shape[0], size=n, replace=n > pool.shape[0]))
        return np.asarray(pool[idx], dtype=float) * self.dataset.attack.scale


def make_source(config: ExperimentConfig):
    if config.dataset:
        return DatasetSource(ingest(config.dataset, config.dataset_format, config.n_profiling_split))
    rng = rng_for(config.seed, _MODEL)
    informative = np.sort(rng.choice(config.m, size=config.n_informative, replace=False))
    model = make_synthetic_model(config.m, config.B, informative, rng, config.coef_scale)
    return SyntheticSource(model, DeviceNoise(config.mu_N, config.sigma_N))


# -- design phase ----------------------------------------------------------

def calibrate_noise(raw: TraceSet) -> tuple[float, float]:
    """Mean and standard deviation over every sample of the key-0 traces."""
    if 0 not in raw.traces or raw.counts[0] == 0:
        raise ValueError("calibration needs traces recorded under key 0")
    t = raw.get(0)
    return float(t.mean()), float(t.std())


def spec_from_calibration(mu: float, sigma: float, rho: float = 1.0, E_A: float = 0.0) -> NoiseSpec:
    return NoiseSpec(mu, max(sigma, 1e-12), rho, E_A)


@dataclass(frozen=True)
class Design:
    omega_P: SelectionSet
    plan: NoisePlan
    G: TransitionMatrix
    spec: NoiseSpec

    def to_text(self) -> str:
        return (f"omega_P: {self.omega_P.to_text()}\n"
                f"spec: mu_a={self.spec.mu_a!r} sigma_a={self.spec.sigma_a!r} "
                f"rho={self.spec.rho!r} E_A={self.spec.E_A!r}\n"
                f"{self.plan.to_text()}{self.G.to_text()}")


def design_phase(raw: TraceSet, method: CompressionMethod, design_trace_count: int,
                 spec: NoiseSpec, rng, A: int | None = None) -> Design:
    """Pick ``Omega_P`` on raw traces, size the budget, solve for ``F*`` and ``G``."""
    available = min(raw.counts.values())
    if design_trace_count > available:
        raise ValueError(f"design phase wants {design_trace_count} traces per key, "
                         f"only {available} available")
    omega_P = select(method, raw.head(design_trace_count))
    budget = impulse_budget(spec, raw.m) if A is None else A
    plan = NoisePlan.arn(omega_P, budget, rng)
    return Design(omega_P, plan, f_to_transition(plan.F), spec)


def raw_design_traces(source, config: ExperimentConfig) -> TraceSet:
    traces = {k: source.profiling(k, config.design_traces, rng_for(config.seed, _DESIGN, k))
              for k in range(2**source.B)}
    return TraceSet(traces, source.m, source.B, "raw")


# -- trials ----------------------------------------------------------------

@dataclass(frozen=True)
class Point:
    """One sweep point: everything a scheme's trials depend on."""

    index: int
    A: int
    rho: float
    I_a: int
    s_d: str
    s_a: str


@dataclass
class PointResult:
    scheme: str
    point: Point
    outcomes: dict
    n_selected_defender: int
    n_selected_attacker: int
    plan: NoisePlan | None
    spec: NoiseSpec | None
    capacity: channel.CapacityReport | None = None


def _plan_for(scheme, point, omega_P, spec, config):
    if scheme == "OA":
        return None, None
    if scheme == "RnF":
        return NoisePlan.rnf(omega_P.m), replace(spec, rho=config.rnf_rho)
    arn = NoisePlan.arn(omega_P, point.A, rng_for(config.seed, _PLAN, point.A))
    spec = replace(spec, rho=point.rho)
    return (arn, spec) if scheme == "ArN" else (NoisePlan.rnp(arn), spec)


def run_point(scheme: str, point: Point, source, omega_P: SelectionSet, spec: NoiseSpec,
              config: ExperimentConfig) -> PointResult:
    """Profile a sealed device once, then ``N_T`` attacks per attack key."""
    plan, pspec = _plan_for(scheme, point, omega_P, spec, config)
    draw = sampler(plan, pspec)
    sid = SCHEMES.index(scheme)
    seed, p = config.seed, point.index

    prof = {}
    for k in range(2**source.B):
        t = source.profiling(k, config.I_p, rng_for(seed, _PROF, p, k))
        if draw is not None and config.noisy_profiling:
            t = t + draw(config.I_p, rng_for(seed, _PROF_NOISE, p, sid, k))
        prof[k] = t
    profiling = TraceSet(prof, source.m, source.B, "profiling")
    sel_a = select(config.method(point.s_a), profiling)
    templates = build_templates(profile(profiling, sel_a), profiling)

    outcomes = {}
    for k in config.attack_keys:
        trials = []
        for t in range(config.N_T):
            traces = source.attack(k, point.I_a, rng_for(seed, _ATT, p, k, t))
            energy = 0.0
            if draw is not None:
                injected = draw(point.I_a, rng_for(seed, _ATT_NOISE, p, sid, k, t))
                traces = traces + injected
                energy = float(np.sum(injected**2))
            trials.append(AttackOutcome(k, attack(templates, traces, sel_a), point.I_a, energy))
        outcomes[k] = trials

    cap = None
    if getattr(source, "model", None) is not None:
        cap = channel.compressed_capacity(source.model.signals(), omega_P, plan,
                                          pspec or spec, source.device_noise)
    return PointResult(scheme, point, outcomes, len(omega_P), len(sel_a), plan, pspec, cap)


def sweep_points(config: ExperimentConfig) -> list[Point]:
    base = dict(A=config.A, rho=config.rho, I_a=config.I_a, s_d=config.s_d, s_a=config.s_a)
    if config.sweep == "none":
        variants = [{}]
    elif config.sweep == "methods":
        variants = [dict(s_d=d, s_a=a) for d, a in config.method_pairs]
    else:
        cast = float if config.sweep == "rho" else int
        variants = [{config.sweep: cast(v)} for v in config.sweep_values]
    if not variants:
        raise ValueError(f"sweep {config.sweep!r} has no values")
    return [Point(i, **{**base, **v}) for i, v in enumerate(variants)]


def _pool_key(scheme: str, point: Point, config: ExperimentConfig):
    """Parameters a scheme's outcome distribution actually depends on."""
    if scheme == "OA":
        return (scheme, point.I_a, point.s_a)
    if scheme == "RnF":
        return (scheme, point.I_a, point.s_a, config.rnf_rho)
    return (scheme, point)


def run_experiment(config: ExperimentConfig, source=None) -> list[dict]:
    """Run every (point, scheme) and return one summary row per pair.

    OA and RnF trials are pooled across sweep points that differ only in
    parameters those schemes ignore (A, rho, the designer's method).
    """
    source = source or make_source(config)
    if config.A is None and config.E_A is None:
        raise ValueError("set either A or E_A")
    raw = raw_design_traces(source, config)
    mu, sigma = calibrate_noise(raw)
    mu = mu if config.mu_a is None else config.mu_a
    sigma = sigma if config.sigma_a is None else config.sigma_a
    base_spec = spec_from_calibration(mu, sigma, config.rho, config.E_A or 0.0)

    points = sweep_points(config)
    if config.A is None:
        points = [replace(p, A=impulse_budget(replace(base_spec, rho=p.rho), source.m))
                  for p in points]
    omegas = {}
    results = []
    for point in points:
        for scheme in config.schemes:
            try:
                if point.s_d not in omegas:
                    omegas[point.s_d] = select(config.method(point.s_d), raw)
                results.append(run_point(scheme, point, source, omegas[point.s_d],
                                         base_spec, config))
            except Exception as exc:  # one bad point must not sink the sweep
                log.error("sweep point %d (%s) failed: %s", point.index, scheme, exc)

    pools: dict = {}
    for r in results:
        pool = pools.setdefault(_pool_key(r.scheme, r.point, config), {})
        for k, v in r.outcomes.items():
            pool.setdefault(k, []).extend(v)

    sigma2 = base_spec.sigma_a**2
    rows = []
    for r in results:
        pooled = pools[_pool_key(r.scheme, r.point, config)]
        row = {
            "scheme": r.scheme, "S_D": r.point.s_d, "S_A": r.point.s_a,
            "A": r.point.A, "rho": r.spec.rho if r.spec else r.point.rho,
            "I_p": config.I_p, "I_a": r.point.I_a,
            "SRR": srr(pooled),
            "EE_avg": math.nan if r.scheme == "OA" else ee_avg(pooled, config.N_T, source.m, sigma2),
            "m_c_defender": r.n_selected_defender, "m_c_attacker": r.n_selected_attacker,
            "n_impulses": 0 if r.plan is None else r.plan.count,
            "noise_energy": sum(o.noise_energy for v in r.outcomes.values() for o in v),
            "n_trials": sum(len(v) for v in pooled.values()),
        }
        if r.capacity is not None:
            row.update({f"cap_{k}": v for k, v in r.capacity.as_row().items()})
        rows.append(row)
    return rows


# -- reports ---------------------------------------------------------------

RESULT_COLUMNS = ("scheme", "S_D", "S_A", "A", "rho", "I_p", "I_a", "SRR", "EE_avg")
CAPACITY_COLUMNS = ("scheme", "S_D", "S_A", "A", "rho", "snr", "capacity_bits",
                    "signal_energy", "device_noise_energy", "injected_noise_energy")


def _fmt(v):
    if isinstance(v, float):
        return "NA" if math.isnan(v) else f"{v:.6f}"
    return str(v)


def write_csv(rows, path, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def render_table(rows, schemes=SCHEMES) -> str:
    """Text table with one line per sweep point, SRR (%) and EE_avg per scheme."""
    by_point: dict = {}
    for r in rows:
        key = (r["S_D"], r["S_A"], r["A"], r["I_a"])
        by_point.setdefault(key, {})[r["scheme"]] = r
    present = [s for s in schemes if any(s in v for v in by_point.values())]
    head = f"{'(S_D, S_A)':<22}{'A':>6}{'I_a':>6}"
    for s in present:
        head += f"{s + ' SRR%':>12}" + ("" if s == "OA" else f"{s + ' EE':>12}")
    lines = [head, "-" * len(head)]
    for (sd, sa, A, I_a), cells in by_point.items():
        line = f"{'(' + sd + ', ' + sa + ')':<22}{A:>6}{I_a:>6}"
        for s in present:
            r = cells.get(s)
            line += f"{100 * r['SRR']:>12.2f}" if r else f"{'-':>12}"
            if s != "OA":
                line += f"{r['EE_avg']:>12.4f}" if r else f"{'-':>12}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def run_sweep(config: ExperimentConfig) -> dict[str, Path]:
    """Run the configured sweep and write CSV + text reports to ``out_dir``."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    source = make_source(config)
    rows = run_experiment(config, source)
    tag = config.sweep
    files = {"results": out / f"sweep_{tag}.csv", "summary": out / f"summary_{tag}.txt"}
    write_csv(rows, files["results"], RESULT_COLUMNS)
    files["summary"].write_text(render_table(rows))
    if rows and "cap_snr" in rows[0]:
        cap_rows = [{**r, **{k[4:]: v for k, v in r.items() if k.startswith("cap_")}} for r in rows]
        files["capacity"] = out / f"capacity_{tag}.csv"
        write_csv(cap_rows, files["capacity"], CAPACITY_COLUMNS)
    return files
