"""Command-line front end: JSON config in, CSV out, meaningful exit codes.

Exit codes: 0 success, 1 validation-suite failure, 2 configuration error,
3 unsupported scheme/design combination. The FDCRAN_THREADS environment
variable caps the Monte Carlo worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import association as assoc
from . import montecarlo as mc
from .analytic import validate_report
from .config import ConfigError, SystemConfig, config_hash, load_config

EXIT_OK = 0
EXIT_VALIDATE_FAIL = 1
EXIT_CONFIG_ERROR = 2
EXIT_UNSUPPORTED = 3

LN2 = math.log(2.0)

_RATE_FIELDS = ("rate_ul", "rate_dl", "rate_sum", "std_error",
                "analytic_value", "mc_value", "mc_std_error", "abs_gap")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _write_csv(rows: list[dict], columns: list[str], out_path: str | None,
               to_bits: bool) -> None:
    if to_bits:
        rows = [
            {k: (v / LN2 if k in _RATE_FIELDS and isinstance(v, float) else v)
             for k, v in row.items()}
            for row in rows
        ]
    sink = open(out_path, "w", newline="", encoding="utf-8") if out_path else sys.stdout
    try:
        writer = csv.writer(sink)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    finally:
        if out_path:
            sink.close()


def _write_manifest(command: str, config: SystemConfig, out_path: str | None,
                    started: str) -> None:
    if not out_path:
        return
    manifest = {
        "command": command,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "output_paths": [out_path],
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_effective_config(args) -> SystemConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = cfg.replace(**overrides)
        cfg.validate()
    return cfg


_SWEEP_COLUMNS = ["scheme", "design", "duplex", "rate_ul", "rate_dl",
                  "rate_sum", "std_error", "trials"]


def cmd_single(args) -> int:
    cfg = _load_effective_config(args)
    started = datetime.now(timezone.utc).isoformat()
    est_ul, est_dl, est_sum = mc.estimate(cfg, args.scheme, args.design)
    row = {
        "scheme": args.scheme,
        "design": args.design,
        "duplex": mc.DUPLEX_FD,
        "p_d": cfg.p_d,
        "phi": cfg.phi,
        "rate_ul": est_ul.mean,
        "rate_dl": est_dl.mean,
        "rate_sum": est_sum.mean,
        "std_error": est_sum.std_error,
        "trials": est_sum.trials,
    }
    columns = ["scheme", "design", "duplex", "p_d", "phi"] + _SWEEP_COLUMNS[3:]
    _write_csv([row], columns, args.out, args.bits)
    _write_manifest("single", cfg, args.out, started)
    unit = "bits" if args.bits else "nats"
    scale = LN2 if args.bits else 1.0
    print(f"{args.scheme}/{args.design}: ul={est_ul.mean / scale:.6g} "
          f"dl={est_dl.mean / scale:.6g} sum={est_sum.mean / scale:.6g} {unit} "
          f"(se={est_sum.std_error / scale:.3g}, trials={est_sum.trials})",
          file=sys.stderr)
    return EXIT_OK


def cmd_rate_region(args) -> int:
    cfg = _load_effective_config(args)
    started = datetime.now(timezone.utc).isoformat()
    p_grid = np.linspace(0.0, 1.0, args.points)
    rows = mc.rate_region(cfg, p_grid=p_grid)
    _write_csv(rows, ["scheme", "design", "duplex", "p_d"] + _SWEEP_COLUMNS[3:],
               args.out, args.bits)
    _write_manifest("rate-region", cfg, args.out, started)
    return EXIT_OK


def cmd_phi_sweep(args) -> int:
    cfg = _load_effective_config(args)
    started = datetime.now(timezone.utc).isoformat()
    phi_grid = np.linspace(args.phi_from, args.phi_to, args.steps)
    rows = mc.phi_sweep(cfg, phi_grid=phi_grid)
    _write_csv(rows, ["scheme", "design", "duplex", "phi"] + _SWEEP_COLUMNS[3:],
               args.out, args.bits)
    _write_manifest("phi-sweep", cfg, args.out, started)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_effective_config(args)
    started = datetime.now(timezone.utc).isoformat()
    rows = validate_report(cfg)
    columns = ["formula_id", "analytic_value", "mc_value", "mc_std_error",
               "abs_gap", "verdict"]
    _write_csv(rows, columns, args.out, args.bits)
    _write_manifest("validate", cfg, args.out, started)
    failures = [r["formula_id"] for r in rows if r["verdict"] != "PASS"]
    for row in rows:
        print(f"{row['formula_id']:>10}: {row['verdict']} "
              f"(analytic={row['analytic_value']:.6g} mc={row['mc_value']:.6g} "
              f"gap={row['abs_gap']:.3g})", file=sys.stderr)
    if failures:
        print(f"FAIL: {', '.join(failures)}", file=sys.stderr)
        return EXIT_VALIDATE_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdcran",
        description="Full-duplex C-RAN rate simulator and analytic validator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument("--bits", action="store_true",
                       help="report rates in bits instead of nats")

    p = sub.add_parser("single", help="one Monte Carlo estimate")
    common(p)
    p.add_argument("--scheme", choices=assoc.SCHEMES, required=True)
    p.add_argument("--design", choices=assoc.DESIGNS, required=True)
    p.set_defaults(func=cmd_single)

    p = sub.add_parser("rate-region", help="sweep the DL share of RRHs")
    common(p)
    p.add_argument("--points", type=int, default=21, help="grid points on [0, 1]")
    p.set_defaults(func=cmd_rate_region)

    p = sub.add_parser("phi-sweep", help="sweep the protection sector half-angle")
    common(p)
    p.add_argument("--from", dest="phi_from", type=float, default=0.0)
    p.add_argument("--to", dest="phi_to", type=float, default=math.pi)
    p.add_argument("--steps", type=int, default=16)
    p.set_defaults(func=cmd_phi_sweep)

    p = sub.add_parser("validate", help="analytic vs Monte Carlo comparison")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except assoc.UnsupportedCombinationError as exc:
        print(f"unsupported combination: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
