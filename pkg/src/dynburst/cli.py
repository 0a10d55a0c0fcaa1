"""Command-line entry point.

Exit codes: 0 success, 2 invalid configuration or failed validation,
3 file-system error, 4 quadrature failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as cfgmod
from . import report
from .detector import validate_scenario
from .solver import QuadratureError

OUTPUT_ENV = "DYNBURST_OUTPUT"
EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_QUAD = 0, 2, 3, 4

_MODELS = {"exp-decay": "alg1", "general-decay": "alg2"}


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "dynburst-runs"))


def _betas(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("step sizes must be positive")
    return vals


def _load(ref: str, beta: float | None = None) -> cfgmod.RunConfig:
    cfg = cfgmod.load(cfgmod.resolve(ref))
    return cfg.with_beta(beta) if beta is not None else cfg


def _run_dir(args, cfg: cfgmod.RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    return output_root() / f"{cfg.name}-beta{cfg.scenario.beta:g}"


def _print_run(rep: report.RunReport):
    sys.stdout.write(rep.summary())
    for key, path in rep.files.items():
        print(f"wrote {key}: {path}")


def cmd_run(args) -> int:
    cfg = _load(args.config, args.beta)
    rep = report.run(cfg, _run_dir(args, cfg), figures=not args.no_figures)
    _print_run(rep)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    mode = _MODELS[args.model]
    if args.variant == "alt":
        if mode != "alg1" or args.background != "exp":
            raise cfgmod.ConfigError("the alternative burst times exist for --model exp-decay --background exp")
        name = "paper-alt"
    else:
        name = f"{mode}-{args.background}"
    cfg = _load(name, args.beta)
    rep = report.run(cfg, _run_dir(args, cfg), figures=not args.no_figures)
    _print_run(rep)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args.config)
    out = Path(args.out) if args.out else output_root() / f"{cfg.name}-sweep"
    rows = report.sweep_beta(cfg, args.betas, out, figures=not args.no_figures)
    print("beta,max_error,bound,detected")
    for r in rows:
        print(f"{r.beta!r},{r.max_error!r},{r.bound!r},{r.detected}")
    print(f"wrote sweep: {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_truth(args) -> int:
    cfg = _load(args.config)
    truth = report.ground_truth(cfg)
    print(",".join(["burst_id", *cfg.samplers.names]))
    for j, row in enumerate(truth):
        print(",".join([str(j), *(repr(float(v)) for v in row)]))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load(args.config, args.beta)
    rep = validate_scenario(cfg.scenario, cfg.samplers, cfg.mode)
    print(rep.render())
    return EXIT_OK if rep.ok else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dynburst",
        description="Detect bursts in a semigroup evolution from space-time samples and recover their shapes.",
        epilog=f"Outputs go under ${OUTPUT_ENV} (default ./dynburst-runs) unless --out is given. "
               f"Bundled configs: {', '.join(cfgmod.BUNDLED)}.",
    )
    ap.add_argument("--print-schema", action="store_true", help="print the config JSON schema and exit")
    sub = ap.add_subparsers(dest="command")

    def out_opts(p):
        p.add_argument("--out", help="output directory")
        p.add_argument("--no-figures", action="store_true", help="skip PNG figures")

    p = sub.add_parser("run", help="simulate, detect and report one config")
    p.add_argument("config", help="YAML path or bundled config name")
    p.add_argument("--beta", type=float, help="override the sampling step")
    out_opts(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce-paper", help="run a bundled reference scenario")
    p.add_argument("--model", choices=sorted(_MODELS), required=True)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--background", choices=["exp", "sin"], default="exp")
    p.add_argument("--variant", choices=["main", "alt"], default="main",
                   help="alt: bursts at 0.25, 0.76, 1.1 (exp-decay, exp background)")
    out_opts(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("sweep-beta", help="maximum recovery error and bound over several steps")
    p.add_argument("config")
    p.add_argument("--betas", type=_betas, required=True, help="comma-separated, e.g. 0.015,0.01")
    out_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ground-truth", help="burst/sampler inner products on a 4x finer grid")
    p.add_argument("config")
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("validate", help="check a config against the model assumptions")
    p.add_argument("config")
    p.add_argument("--beta", type=float)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.print_schema:
        print(json.dumps(cfgmod.SCHEMA, indent=2))
        return EXIT_OK
    if not args.command:
        ap.print_help()
        return EXIT_INVALID
    try:
        return args.func(args)
    except report.ValidationFailed as exc:
        print(exc.report.render(), file=sys.stderr)
        return EXIT_INVALID
    except (cfgmod.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_QUAD
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
