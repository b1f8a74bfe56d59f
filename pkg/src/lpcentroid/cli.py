"""Command-line surface: constants, body computations, verification batches."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .errors import NumericFailure
from .geometry import SphereGrid, body_from_json
from .mixed import mixed_volume
from .moments import moment_body
from .params import ParamSet, constant_bundle
from .verify import (CSV_HEADER, DEFAULT_KIND, INEQUALITY_IDS, ParamSet as _PS,
                     lambda_sweep, run_batch)

CONFIG_ENV_VAR = "LPCENTROID_CONFIG"


@dataclass
class RunConfig:
    """Tunable sizes and outputs; file keys merge under explicit flags."""

    sphere_n: int = 1024
    field_shape: int = 128
    truncation: float | None = None
    slack: float | None = None
    seed: int = 0
    out: str | None = None
    fmt: str = "json"

    @staticmethod
    def from_file(path: str) -> dict:
        allowed = {f.name for f in dc_fields(RunConfig)}
        values: dict = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{line_no}: expected key=value")
                key, _, raw = line.partition("=")
                key = key.strip()
                if key not in allowed:
                    raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
                values[key] = raw.strip()
        return values


def _coerce(key: str, raw):
    casts = {"sphere_n": int, "field_shape": int, "seed": int,
             "truncation": float, "slack": float, "out": str, "fmt": str}
    return casts[key](raw)


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    if path:
        for key, raw in RunConfig.from_file(path).items():
            setattr(cfg, key, _coerce(key, raw))
    for key in ("sphere_n", "field_shape", "truncation", "slack", "seed", "out", "fmt"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            setattr(cfg, key, val)
    if cfg.sphere_n <= 0 or cfg.field_shape <= 0:
        raise ValueError("sizes must be positive")
    return cfg


def _params_from_args(args) -> ParamSet:
    return ParamSet(n=args.n, p=args.p, r=args.r, lam=getattr(args, "lam"))


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def cmd_constants(args) -> int:
    cfg = build_config(args)
    bundle = constant_bundle(_params_from_args(args))
    _emit(json.dumps(bundle.as_dict(), indent=2), cfg.out)
    return 0


def cmd_moment_body(args) -> int:
    cfg = build_config(args)
    with open(args.infile, encoding="utf-8") as fh:
        body = body_from_json(json.load(fh))
    grid = SphereGrid.circle(cfg.sphere_n) if body.dim == 2 else SphereGrid.sphere()
    mb = moment_body(body, args.p, grid)
    _emit(json.dumps(mb.to_json()), cfg.out)
    return 0


def cmd_mixed_volume(args) -> int:
    cfg = build_config(args)
    with open(args.k, encoding="utf-8") as fh:
        k = body_from_json(json.load(fh))
    with open(args.l, encoding="utf-8") as fh:
        l = body_from_json(json.load(fh))
    grid = SphereGrid.circle(cfg.sphere_n) if k.dim == 2 else SphereGrid.sphere()
    value = mixed_volume(k, l, args.r, grid)
    _emit(json.dumps({"V_r": value, "r": args.r}), cfg.out)
    return 0


def _write_reports(reports, out_prefix: str | None) -> bool:
    lines = [rep.to_json() for rep in reports]
    rows = [CSV_HEADER] + [rep.csv_row() for rep in reports]
    if out_prefix:
        with open(out_prefix + ".jsonl", "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(out_prefix + ".csv", "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
    else:
        print("\n".join(rows))
    return all(rep.passed for rep in reports)


def cmd_verify(args) -> int:
    cfg = build_config(args)
    params = _params_from_args(args)
    size = {"shape": cfg.field_shape}
    if cfg.truncation is not None:
        size["truncation"] = cfg.truncation
    seeds = range(cfg.seed, cfg.seed + args.seeds)
    grid = SphereGrid.circle(cfg.sphere_n)
    try:
        reports = run_batch(args.id, seeds, params, kind=args.kind, grid=grid,
                            size=size, slack=cfg.slack)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    ok = _write_reports(reports, cfg.out)
    n_pass = sum(rep.passed for rep in reports)
    print(f"{args.id}: {n_pass}/{len(reports)} checks passed", file=sys.stderr)
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    params = _params_from_args(args)
    grid = SphereGrid.circle(cfg.sphere_n)
    if args.lambda_grid:
        lams = [float(x) for x in args.lambda_grid.split(",")]
        reports = []
        for lam in lams:
            pset = ParamSet(n=params.n, p=params.p, r=params.r, lam=lam)
            reports.extend(run_batch(args.id, range(args.seeds), pset, grid=grid,
                                     size={"shape": cfg.field_shape}))
    else:
        reports = lambda_sweep(args.id, params, n_points=args.points,
                               seeds=range(args.seeds), grid=grid)
    ok = _write_reports(reports, cfg.out)
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    from .oracles import run_constant_oracles

    if args.target != "constants":
        print(f"unknown oracle target {args.target!r}", file=sys.stderr)
        return 2
    cfg = build_config(args)
    result = run_constant_oracles(seed=cfg.seed)
    print(json.dumps(result, indent=2))
    return 0 if result["max_discrepancy"] < 1e-8 else 1


def _add_common(sp, params=True):
    sp.add_argument("--config", help="key=value config file (flags win)")
    sp.add_argument("--sphere-n", type=int, dest="sphere_n")
    sp.add_argument("--field-shape", type=int, dest="field_shape")
    sp.add_argument("--truncation", type=float)
    sp.add_argument("--slack", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output path (prefix for verify/sweep)")
    sp.add_argument("--fmt", choices=["json", "csv"])
    if params:
        sp.add_argument("--n", type=int, default=2)
        sp.add_argument("--p", type=float, default=2.0)
        sp.add_argument("--r", type=float, default=1.5)
        sp.add_argument("--lambda", type=float, default=2.0, dest="lam")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lpcentroid",
        description="Moment/centroid bodies, mixed volumes and inequality checks")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", help="evaluate every constant as JSON")
    _add_common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("moment-body", help="moment body of a body literal")
    sp.add_argument("--in", dest="infile", required=True, help="body JSON file")
    sp.add_argument("--p", type=float, required=True)
    _add_common(sp, params=False)
    sp.set_defaults(func=cmd_moment_body)

    sp = sub.add_parser("mixed-volume", help="L_r mixed volume of two bodies")
    sp.add_argument("--k", required=True, help="first body JSON file")
    sp.add_argument("--l", required=True, help="second body JSON file")
    sp.add_argument("--r", type=float, default=1.0)
    _add_common(sp, params=False)
    sp.set_defaults(func=cmd_mixed_volume)

    sp = sub.add_parser("verify", help="run one inequality over seeded instances")
    sp.add_argument("--id", required=True, choices=list(INEQUALITY_IDS))
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--kind", choices=sorted({*DEFAULT_KIND.values(),
                                              "random-ellipse", "dilate-pair",
                                              "extremal-pair", "sobolev-extremal",
                                              "layer-extremal",
                                              "radial-body-pair",
                                              "radial-profile-field"}))
    _add_common(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="lambda sweep of one inequality")
    sp.add_argument("--id", required=True, choices=list(INEQUALITY_IDS))
    sp.add_argument("--lambda-grid", dest="lambda_grid",
                    help="comma-separated lambda values")
    sp.add_argument("--points", type=int, default=10)
    sp.add_argument("--seeds", type=int, default=1)
    _add_common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("oracle", help="independent oracles for the constants")
    sp.add_argument("target", choices=["constants"])
    _add_common(sp, params=False)
    sp.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
