"""Command-line front end.

Exit codes: 0 success, 1 operational error, 2 weight not admissible,
3 inequality violated.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolve import (
    SolveConfig,
    SolverError,
    principal,
    refine_and_extrapolate,
    second_radial_general_p,
    spectrum_p2,
)
from .io import OutputDir, RunManifest, resolve_out_dir
from .radialfem import DiscreteField, build_grid
from .rearrange import (
    ExponentContext,
    LorentzIndex,
    SampledFunction,
    check_hardy_littlewood,
    check_polya_szego,
    decreasing_rearrangement,
    lorentz_norm,
    lorentz_quasinorm,
)
from .weightlib import (
    _lorentz_representation,
    class_A_verdict,
    truncated_power_family,
    verify_hardy_sobolev,
    verify_weighted_embedding,
    weight_from_dict,
)

EXIT_OK, EXIT_ERROR, EXIT_INADMISSIBLE, EXIT_VIOLATION = 0, 1, 2, 3


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are operational errors, keeping exit code 2 for admissibility
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text: str) -> list:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _common(sp: argparse.ArgumentParser, weight: bool = True) -> None:
    sp.add_argument("--config", help="JSON file whose keys mirror the flags")
    sp.add_argument("--out", help="output directory (else $EXTSPEC_OUT, else ./extspec_out)")
    sp.add_argument("--N", type=int, default=3)
    sp.add_argument("--p", type=float, default=2.0)
    if weight:
        sp.add_argument("--kind", choices=["power", "powerlog", "piecewise", "sampled", "sum"],
                        default="power")
        sp.add_argument("--c", type=float, default=1.0)
        sp.add_argument("--q", type=float, default=4.0)
        sp.add_argument("--r0", type=float, default=None)
        sp.add_argument("--weight-file", help="JSON weight spec (overrides --kind)")


def _grid_flags(sp):
    sp.add_argument("--R", type=float, default=64.0)
    sp.add_argument("--n", type=int, default=8192)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=int, default=5)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="extspec", description="Weighted p-Laplacian eigenvalues on exterior domains")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("weight-check", help="admissibility report for a weight")
    _common(sp)
    sp.add_argument("--threshold", type=float, default=1e-3)

    sp = sub.add_parser("rearrange", help="f*, f** and Lorentz norms of a weight profile")
    _common(sp)
    sp.add_argument("--lorentz-p", type=float, default=None, help="default N/p")
    sp.add_argument("--lorentz-q", type=float, default=math.inf)
    sp.add_argument("--samples", type=int, default=200)

    sp = sub.add_parser("eig", help="eigenvalue solve")
    _common(sp)
    _grid_flags(sp)
    sp.add_argument("--mode", choices=["principal", "spectrum", "second"], default="principal")
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--lmax", type=int, default=0)

    sp = sub.add_parser("sweep", help="principal eigenvalue over an (R, n) ladder")
    _common(sp)
    _grid_flags(sp)
    sp.add_argument("--R-list", type=_floats, default=[16.0, 32.0, 64.0])
    sp.add_argument("--n-list", type=_ints, default=[8192])
    sp.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")

    sp = sub.add_parser("verify", help="inequality verification suites")
    _common(sp)
    sp.add_argument("--suite", choices=["hardy-sobolev", "embedding", "hardy-littlewood",
                                        "polya-szego", "all"], default="all")
    sp.add_argument("--family", type=int, default=50)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--constant-override", type=float, default=None,
                    help="test hook: replace the inequality constant")
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = ap.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    sub = ap._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_").lstrip("_")
        if dest == "command":
            continue
        if dest not in known:
            raise CliError(f"unknown config key: {key}")
        if dest == "R_list" and not isinstance(val, list):
            val = _floats(val)
        if dest == "n_list" and not isinstance(val, list):
            val = _ints(val)
        defaults[dest] = val
    sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def _weight(args):
    if getattr(args, "weight_file", None):
        return weight_from_dict(json.loads(Path(args.weight_file).read_text()))
    d = {"kind": args.kind, "c": args.c, "q": args.q}
    if args.r0 is not None:
        d["r0"] = args.r0
    if args.kind in ("piecewise", "sampled", "sum"):
        raise CliError(f"--kind {args.kind} needs --weight-file")
    return weight_from_dict(d)


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "out")}


def _open(args, command: str) -> OutputDir:
    man = RunManifest(command, _echo(args))
    for attr in ("config", "weight_file"):
        path = getattr(args, attr, None)
        if path:
            man.add_input(path)
    return OutputDir(resolve_out_dir(args.out), man)


# ---------------------------------------------------------------------------
# commands


def cmd_weight_check(args) -> int:
    ctx = ExponentContext(args.N, args.p)
    w = _weight(args)
    rep = class_A_verdict(w, ctx, threshold=args.threshold)
    out = _open(args, "weight-check")
    out.json("admissibility.json", rep.to_dict())
    out.close()
    route = rep.route or "-"
    print(f"class_A={str(rep.class_A).lower()} route={route} x_norm={rep.x_norm:.17g} "
          f"weak_norm={rep.weak_norm if rep.weak_norm is None else format(rep.weak_norm, '.17g')}")
    if not rep.class_A:
        print(f"reason: {rep.reason}")
        return EXIT_INADMISSIBLE
    return EXIT_OK


def cmd_rearrange(args) -> int:
    ctx = ExponentContext(args.N, args.p)
    w = _weight(args)
    f = _lorentz_representation(w, ctx)
    fs = decreasing_rearrangement(f)
    lp = args.lorentz_p if args.lorentz_p is not None else ctx.N / ctx.p
    idx = LorentzIndex(lp, args.lorentz_q)
    quasi = lorentz_quasinorm(fs, idx)
    norm = lorentz_norm(fs, idx)
    ts = np.geomspace(1e-3, 1e6, args.samples)
    fstar = fs(ts)
    fss = np.array([fs.integral(t) / t for t in ts])
    out = _open(args, "rearrange")
    csv_path = out.register("rearrangement.csv")
    with open(csv_path, "w") as fh:
        fh.write("t,fstar,fstarstar\n")
        for row in zip(ts, fstar, fss):
            fh.write(",".join(format(float(x), ".17g") for x in row) + "\n")
    out.json("rearrangement.json", {
        "weight": w.to_dict(), "N": ctx.N, "p": ctx.p,
        "lorentz_p": lp, "lorentz_q": args.lorentz_q,
        "quasinorm": quasi, "norm": norm, "samples": "rearrangement.csv",
    })
    out.close()
    print(f"quasinorm={quasi:.17g} norm={norm:.17g}")
    return EXIT_OK


def _solve_config(args) -> SolveConfig:
    return SolveConfig(residual_tol=args.tol, seed=args.seed, restarts=args.restarts)


def _write_field(out: OutputDir, name: str, field: DiscreteField) -> str:
    field.to_csv(out.register(name))
    return name


def cmd_eig(args) -> int:
    ctx = ExponentContext(args.N, args.p)
    w = _weight(args)
    grid = build_grid(args.n, args.R, args.gamma, args.N)
    cfg = _solve_config(args)
    out = _open(args, "eig")
    if args.mode == "spectrum":
        res = spectrum_p2(w, ctx, grid, args.k, args.lmax, seed=args.seed)
        items = []
        for i, r in enumerate(res, 1):
            d = r.to_dict()
            d["field_csv"] = _write_field(out, f"eigenfunction_{i}.csv", r.field)
            items.append(d)
        out.json("eig_spectrum.json", {"mode": "spectrum", "eigenvalues": [r.eigenvalue for r in res],
                                       "results": items})
        out.close()
        print(" ".join(format(r.eigenvalue, ".17g") for r in res))
        return EXIT_OK
    solver = principal if args.mode == "principal" else second_radial_general_p
    r = solver(w, ctx, grid, cfg)
    d = r.to_dict()
    d["mode"] = args.mode
    d["field_csv"] = _write_field(out, f"eigenfunction_{args.mode}.csv", r.field)
    out.json(f"eig_{args.mode}.json", d)
    out.close()
    print(format(r.eigenvalue, ".17g"))
    return EXIT_OK


def _sweep_cell(job: dict) -> dict:
    ctx = ExponentContext(job["N"], job["p"])
    w = weight_from_dict(job["weight"])
    grid = build_grid(job["n"], job["R"], job["gamma"], job["N"])
    cfg = SolveConfig(residual_tol=job["tol"], seed=job["seed"], restarts=job["restarts"])
    try:
        r = principal(w, ctx, grid, cfg)
    except (SolverError, ValueError) as exc:
        return {"R": job["R"], "n": job["n"], "error": str(exc)}
    return {"R": job["R"], "n": job["n"], "result": r.to_dict()}


def run_cells(jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        cells = [_sweep_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            cells = list(ex.map(_sweep_cell, jobs))
    return sorted(cells, key=lambda c: (c["R"], c["n"]))


class _Stub:
    """Minimal EigenResult stand-in rebuilt from a sweep cell."""

    def __init__(self, d):
        self.eigenvalue = d["lambda"]
        self.R = d["R"]
        self.n = d["n"]


def cmd_sweep(args) -> int:
    w = _weight(args)
    base = {"N": args.N, "p": args.p, "weight": w.to_dict(), "gamma": args.gamma,
            "tol": args.tol, "seed": args.seed, "restarts": args.restarts}
    jobs = [dict(base, R=float(R), n=int(n)) for R in args.R_list for n in args.n_list]
    workers = args.jobs if args.jobs is not None else (os.cpu_count() or 1)
    cells = run_cells(jobs, workers)
    out = _open(args, "sweep")
    for c in cells:
        out.json(f"cell_R{c['R']:g}_n{c['n']}.json", c)
    ok = [_Stub(c["result"]) for c in cells if "result" in c]
    missing = [{"R": c["R"], "n": c["n"], "error": c["error"]} for c in cells if "error" in c]
    summary = {"cells": len(cells), "missing": missing, "extrapolation": None, "refused": None}
    try:
        ext = refine_and_extrapolate(ok)
        summary["extrapolation"] = ext.to_dict()
    except ValueError as exc:
        summary["refused"] = str(exc)
    out.json("sweep_summary.json", summary)
    out.close()
    if summary["extrapolation"]:
        print(f"lambda_inf={summary['extrapolation']['limit']:.17g}")
    else:
        print(f"extrapolation refused: {summary['refused']}")
    return EXIT_OK


def _random_cells(rng, size):
    m = rng.uniform(0.1, 2.0, size)
    return (SampledFunction(rng.uniform(0.0, 5.0, size), m),
            SampledFunction(rng.uniform(0.0, 5.0, size), m))


def _random_radial_field(rng, ctx):
    n = int(rng.integers(4, 40))
    R = float(rng.uniform(1.5, 10.0))
    grid = build_grid(n, R, 1.0, ctx.N)
    v = rng.normal(size=n + 1)
    v[-1] = 0.0
    return DiscreteField(v, grid)


def cmd_verify(args) -> int:
    ctx = ExponentContext(args.N, args.p)
    rng = np.random.default_rng(args.seed)
    suites = ["hardy-sobolev", "embedding", "hardy-littlewood", "polya-szego"]
    if args.suite != "all":
        suites = [args.suite]
    table, witnesses = [], []
    override = args.constant_override
    for s in suites:
        if s == "hardy-sobolev":
            if not ctx.N > ctx.p:
                table.append({"suite": s, "skipped": "requires N > p"})
                continue
            fam = truncated_power_family(ctx, args.family)
            w = weight_from_dict({"kind": "power", "c": 1.0, "q": ctx.p})
            rep = verify_hardy_sobolev(fam, w, ctx, constant_override=override)
            row = {"suite": s, "holds": rep.holds, "worst_ratio": rep.sup, "constant": rep.constant,
                   "members": len(fam)}
            if not rep.holds:
                witnesses.append(f"{s}: member {rep.worst_index} (R={fam[rep.worst_index].grid.R:.6g}) "
                                 f"ratio {rep.sup:.6g} > {rep.constant:.6g}")
        elif s == "embedding":
            w = _weight(args)
            fam = [_random_radial_field(rng, ctx) for _ in range(args.family)]
            rep = verify_weighted_embedding(w, ctx, fam, constant_override=override)
            row = {"suite": s, "holds": rep.holds, "worst_ratio": rep.sup, "members": len(fam),
                   **{k: v for k, v in rep.extra.items()}}
            if not rep.holds:
                witnesses.append(f"{s}: member {rep.worst_index} ratio {rep.sup:.6g}")
        elif s == "hardy-littlewood":
            worst, bad = 0.0, None
            for t in range(args.trials):
                f, g = _random_cells(rng, int(rng.integers(1, 12)))
                chk = check_hardy_littlewood(f, g)
                lhs = chk.lhs if override is None else chk.lhs / override
                ratio = lhs / chk.rhs if chk.rhs > 0 else 0.0
                if ratio > worst:
                    worst = ratio
                if ratio > 1 + 1e-8 and bad is None:
                    bad = t
            row = {"suite": s, "holds": bad is None, "worst_ratio": worst, "trials": args.trials}
            if bad is not None:
                witnesses.append(f"{s}: trial {bad} ratio {worst:.6g}")
        else:
            worst, bad = 0.0, None
            for t in range(args.trials):
                chk = check_polya_szego(_random_radial_field(rng, ctx), ctx)
                lhs = chk.lhs if override is None else chk.lhs / override
                ratio = lhs / chk.rhs if chk.rhs > 0 else 0.0
                worst = max(worst, ratio)
                if ratio > 1 + 1e-3 and bad is None:
                    bad = t
            row = {"suite": s, "holds": bad is None, "worst_ratio": worst, "trials": args.trials}
            if bad is not None:
                witnesses.append(f"{s}: trial {bad} ratio {worst:.6g}")
        table.append(row)
    out = _open(args, "verify")
    ok = all(r.get("holds", True) for r in table)
    out.json("verify.json", {"suites": table, "holds": ok, "witnesses": witnesses})
    out.close()
    for r in table:
        state = "skip" if "skipped" in r else ("pass" if r["holds"] else "FAIL")
        print(f"{r['suite']:<18} {state:<5} worst={r.get('worst_ratio', float('nan')):.6g}")
    if not ok:
        for wt in witnesses:
            print(f"violation: {wt}")
        return EXIT_VIOLATION
    return EXIT_OK


COMMANDS = {
    "weight-check": cmd_weight_check,
    "rearrange": cmd_rearrange,
    "eig": cmd_eig,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        try:
            args = _apply_config(ap, argv)
        except SystemExit as exc:
            # usage errors, --help and --version
            return exc.code if isinstance(exc.code, int) else EXIT_ERROR
        return COMMANDS[args.command](args)
    except (CliError, SolverError, ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
