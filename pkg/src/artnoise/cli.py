"""Command line entry point: ``artnoise {synth,design,attack,sweep,ingest-check}``.

Every ExperimentConfig field is accepted as ``--<field> VALUE`` and overrides
the value read from ``--config``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import datasets
from .device import Device
from .experiment import (_MODEL, _PLAN, RESULT_COLUMNS, ExperimentConfig, calibrate_noise,
                         design_phase, load_config, make_source, raw_design_traces, render_table,
                         rng_for, run_experiment, run_sweep, spec_from_calibration, write_csv)
from .noise import impulse_budget

log = logging.getLogger("artnoise")


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value experiment file")
    group = p.add_argument_group("config overrides")
    for f in fields(ExperimentConfig):
        group.add_argument(f"--{f.name}", dest=f"cfg_{f.name}", metavar="VALUE")


def _config(args) -> ExperimentConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return load_config(args.config, overrides)


def cmd_synth(args):
    cfg = _config(args)
    src = make_source(cfg)
    if src.model is None:
        raise ValueError("synth needs a synthetic source (no dataset=)")
    ts = Device(src.model, src.device_noise).traceset(args.traces, rng_for(cfg.seed, _MODEL, 1), "raw")
    if args.format == "canonical-binary":
        datasets.write_binary(ts, args.output)
    else:
        datasets.write_text(ts, args.output)
    print(f"wrote {sum(ts.counts.values())} traces ({2**ts.B} keys x {args.traces}, m={ts.m}) "
          f"to {args.output}")


def cmd_design(args):
    cfg = _config(args)
    src = make_source(cfg)
    raw = raw_design_traces(src, cfg)
    mu, sigma = calibrate_noise(raw)
    spec = spec_from_calibration(cfg.mu_a if cfg.mu_a is not None else mu,
                                 cfg.sigma_a if cfg.sigma_a is not None else sigma,
                                 cfg.rho, cfg.E_A or 0.0)
    A = cfg.A if cfg.A is not None else impulse_budget(spec, raw.m)
    # same plan stream as the sweep, so `design` shows the plan a sweep uses
    d = design_phase(raw, cfg.method(cfg.s_d), cfg.design_traces, spec, rng_for(cfg.seed, _PLAN, A), A)
    text = d.to_text()
    if args.output:
        Path(args.output).write_text(text)
    print(text, end="")


def cmd_attack(args):
    cfg = replace(_config(args), schemes=(args.scheme,), sweep="none")
    rows = run_experiment(cfg)
    if not rows:
        raise RuntimeError("attack run produced no result")
    if args.output:
        write_csv(rows, args.output, RESULT_COLUMNS)
    print(render_table(rows, (args.scheme,)), end="")


def cmd_sweep(args):
    cfg = _config(args)
    files = run_sweep(cfg)
    print(Path(files["summary"]).read_text(), end="")
    for name, path in files.items():
        print(f"{name}: {path}")


def cmd_ingest_check(args):
    kw = {}
    if args.format == "grizzly-adapter":
        kw = dict(n_keys=args.n_keys, n_traces=args.n_traces, m=args.m)
    ds = datasets.ingest(args.path, args.format, args.n_profiling, **kw)
    for role, ts in (("profiling", ds.profiling), ("attack", ds.attack)):
        if ts is None:
            continue
        counts = sorted(set(ts.counts.values()))
        print(f"{role}: {len(ts.keys)} keys, m={ts.m}, B={ts.B}, traces per key {counts}")
    print("ok")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artnoise", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic raw dataset")
    _add_config_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--traces", type=int, default=10, help="traces per key")
    p.add_argument("--format", choices=datasets.FORMATS[:2], default="canonical-text")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("design", help="emit Omega_P, F* and the transition matrix G")
    _add_config_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("attack", help="run one noise scheme")
    _add_config_flags(p)
    p.add_argument("--scheme", choices=("OA", "RnF", "RnP", "ArN"), default="ArN")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("sweep", help="run the configured sweep and write reports")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ingest-check", help="validate a trace-set file")
    p.add_argument("path")
    p.add_argument("--format", choices=datasets.FORMATS, default="canonical-text")
    p.add_argument("--n-profiling", type=int)
    p.add_argument("--n-keys", type=int, default=256)
    p.add_argument("--n-traces", type=int, default=3072)
    p.add_argument("--m", type=int, default=2500)
    p.set_defaults(func=cmd_ingest_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:
        print(f"artnoise {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
