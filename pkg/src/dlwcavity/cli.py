"""Command-line entry point.

    dlwcavity simulate <config> [--out DIR] [--seed INT] [--threads INT]
    dlwcavity validate <config>
    dlwcavity sweep <config> --param geometry.d --values 0.8:2.0:0.1

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .config import override, parse_config
from .errors import (
    CavityError,
    ConfigError,
    DomainError,
    ExtractionError,
    FormatError,
    GeometryError,
    SolverError,
    ValidationError,
)
from .runner import run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("dlwcavity")


def exit_code_for(exc):
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_IO
    if isinstance(exc, (SolverError, ExtractionError, DomainError)):
        return EXIT_SOLVER
    if isinstance(exc, (ConfigError, ValidationError, GeometryError)):
        return EXIT_CONFIG
    return EXIT_SOLVER


def parse_values(text):
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--values range must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"--values range must be numeric, got {text!r}") from None
        if step <= 0 or stop < start:
            raise ConfigError("--values needs step > 0 and stop >= start")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"--values list must be numeric, got {text!r}") from None


def _load(args):
    s = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        s = dataclasses.replace(s, seed=args.seed)
    return s


def cmd_validate(args):
    s = _load(args)
    print(f"ok: {args.config} ({s.kind}, D0 = {s.cavity.D0:.4f} um)")
    return EXIT_OK


def cmd_simulate(args):
    s = _load(args)
    out = args.out or s.output or os.path.join("out", s.kind)
    manifest = run_scenario(s, out, threads=args.threads)
    print(json.dumps(manifest["results"], sort_keys=True))
    print(f"wrote {len(manifest['outputs'])} files to {out}")
    return EXIT_OK


def cmd_sweep(args):
    s = _load(args)
    values = parse_values(args.values)
    out = args.out or s.output or os.path.join("out", f"{s.kind}_sweep")
    os.makedirs(out, exist_ok=True)
    if s.kind == "double_well" and args.param == "geometry.d":
        joined = ", ".join(repr(v) for v in values)
        manifest = run_scenario(override(s, "geometry.d", joined), out, threads=args.threads)
        print(json.dumps(manifest["results"], sort_keys=True))
        return EXIT_OK
    rows = []
    for v in values:
        sub = override(s, args.param, v)
        if args.seed is not None:
            sub = dataclasses.replace(sub, seed=args.seed)
        manifest = run_scenario(sub, os.path.join(out, f"{args.param}={v:g}"), threads=args.threads)
        res = manifest["results"]
        rows.append({"value": v, **{k: res[k] for k in sorted(res) if np.isscalar(res[k])}})
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as f:
        keys = sorted({k for r in rows for k in r} - {"value"})
        w = csv.DictWriter(f, fieldnames=["value", *keys], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} runs to {out}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dlwcavity", description="Photon-gas modes in printed microcavity potentials")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario")
    sim.add_argument("config")
    sim.add_argument("--out")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--threads", type=int, default=1)
    sim.set_defaults(func=cmd_simulate)

    val = sub.add_parser("validate", help="parse and check a scenario file")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)

    sw = sub.add_parser("sweep", help="repeat a scenario over parameter values")
    sw.add_argument("config")
    sw.add_argument("--param", required=True, help="section.key, e.g. geometry.d")
    sw.add_argument("--values", required=True, help="start:stop:step or comma list")
    sw.add_argument("--out")
    sw.add_argument("--seed", type=int)
    sw.add_argument("--threads", type=int, default=1)
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CavityError, OSError) as exc:
        code = exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
