"""Command-line front end: ``randmap {simulate,enumerate,limits,report}``.

Every subcommand writes into ``--out`` (a directory) and leaves a
``<subcommand>.manifest.json`` there with the resolved configuration and
the sha256 digest of each output file.  The exit status is 0 only when every
requested computation met its tolerance contract.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import claims, exact, limits, montecarlo

EXIT_FAIL = 1
EXIT_USAGE = 2


def parse_grid(text: str) -> tuple[float, ...]:
    """``a:b:h`` -> a, a+h, ..., inclusive of b when b is on the lattice."""
    try:
        a, b, h = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:h, got {text!r}") from None
    if h <= 0 or b < a:
        raise argparse.ArgumentTypeError("grid needs h > 0 and b >= a")
    count = int(math.floor((b - a) / h + 1e-9)) + 1
    return tuple(round(a + i * h, 12) for i in range(count))


def _tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path


def _write_manifest(out: Path, sub: str, config: dict, seed, started: float,
                    outputs: list[Path]) -> None:
    manifest = {
        "subcommand": sub,
        "config": config,
        "master_seed": seed,
        "version": _tool_version(),
        "duration_s": round(time.perf_counter() - started, 3),
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    _write_json(out / f"{sub}.manifest.json", manifest)


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- subcommands

def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = montecarlo.SimConfig(n=args.n, reps=args.reps, master_seed=args.seed,
                               workers=args.threads, ecdf_grid=args.grid,
                               memory_budget=args.memory_budget)
    acc, rows = montecarlo.run_simulation(cfg, return_rows=True)
    lt = None
    if args.ks:
        lt = limits.build_limit_tables(y_grid=[0.0])
    rep = montecarlo.report(acc, lt, master_seed=args.seed) if acc.count >= 2 else None
    out = _outdir(args.out)
    outputs = []
    if rep is not None:
        outputs.append(_write_json(out / "simreport.json", rep.to_json()))
        print(f"E(nu)/sqrt(n) = {rep.mean_nu_over_sqrt_n.value:.6f} "
              f"+- {rep.mean_nu_over_sqrt_n.stderr:.6f}")
        print(f"Var(nu)/n     = {rep.var_nu_over_n.value:.6f} +- {rep.var_nu_over_n.stderr:.6f}")
        if rep.ks_distance is not None:
            print(f"KS distance   = {rep.ks_distance:.6f}")
    else:
        print("fewer than two replicates: no report written", file=sys.stderr)
    if args.dump_replicates:
        path = out / "replicates.csv"
        montecarlo.write_replicates_csv(path, rows, cfg.n)
        outputs.append(path)
    config = {"n": cfg.n, "reps": cfg.reps, "threads": cfg.workers, "grid": list(cfg.ecdf_grid),
              "ks": args.ks, "dump_replicates": args.dump_replicates,
              "memory_budget": cfg.memory_budget}
    _write_manifest(out, "simulate", config, args.seed, started, outputs)
    return 0 if rep is not None else EXIT_FAIL


def cmd_enumerate(args) -> int:
    started = time.perf_counter()
    table = exact.enumerate_all(args.n, workers=args.threads)
    out = _outdir(args.out)
    path = _write_json(out / f"exact_n{args.n}.json", table.to_json())
    holds = table.identity_holds
    print(f"E(nu^2) = E(mu): {'HOLDS' if holds else 'FAILS'}")
    print(f"E_nu {_q(table.E_nu)}  E_nu2 {_q(table.E_nu2)}  E_mu {_q(table.E_mu)}")
    print(f"connected_count {table.connected_count}")
    _write_manifest(out, "enumerate", {"n": args.n, "threads": args.threads}, None, started, [path])
    return 0 if holds else EXIT_FAIL


def _q(q) -> str:
    return f"{q.numerator}/{q.denominator}"


def cmd_limits(args) -> int:
    started = time.perf_counter()
    x_grid = None if args.grid is None else np.asarray(args.grid)
    y_grid = None if args.ygrid is None else np.asarray(args.ygrid)
    lt = limits.build_limit_tables(theta=args.theta, x_max=args.xmax, step=args.step,
                                   x_grid=x_grid, y_grid=y_grid)
    out = _outdir(args.out)
    px = out / "limits_x.csv"
    with open(px, "w", newline="\n") as fh:
        fh.write("x,p,F,f\n")
        for row in zip(lt.x_grid, lt.p_grid, lt.F_grid, lt.f_grid):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    py = out / "limits_y.csv"
    with open(py, "w", newline="\n") as fh:
        fh.write("y,H\n")
        for row in zip(lt.y_grid, lt.H_grid):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    pc = _write_json(out / "constants.json", lt.constants)
    for k, v in lt.constants.items():
        if v is not None:
            print(f"{k:13s} {v:.13f}")
    config = {"theta": args.theta, "step": lt.density.step, "xmax": lt.density.x_max,
              "grid": [float(v) for v in lt.x_grid], "ygrid": [float(v) for v in lt.y_grid]}
    _write_manifest(out, "limits", config, None, started, [px, py, pc])
    return 0


def cmd_report(args) -> int:
    started = time.perf_counter()
    if not (args.simulate or args.enumerate or args.limits):
        print("report: give at least one of --simulate, --enumerate, --limits", file=sys.stderr)
        return EXIT_USAGE
    try:
        sim = json.loads(Path(args.simulate).read_text()) if args.simulate else None
        ex = [json.loads(Path(p).read_text()) for p in args.enumerate or []]
        const = json.loads(Path(args.limits).read_text()) if args.limits else None
    except (OSError, json.JSONDecodeError) as err:
        print(f"report: cannot read input: {err}", file=sys.stderr)
        return EXIT_USAGE
    if sim is not None and "mean_nu_over_sqrt_n" not in sim:
        print(f"report: {args.simulate} is not a simulation report", file=sys.stderr)
        return EXIT_USAGE
    if const is not None and "mean_mu" not in const:
        print(f"report: {args.limits} is not a limit-constants file", file=sys.stderr)
        return EXIT_USAGE
    if any("E_nu2" not in e for e in ex):
        print("report: an --enumerate input is not an exact table", file=sys.stderr)
        return EXIT_USAGE
    rows = claims.build_rows(sim, ex, const)
    out = _outdir(args.out)
    pc = out / "report.csv"
    pc.write_text(claims.to_csv(rows), encoding="utf-8")
    text = claims.format_table(rows)
    pt = out / "report.txt"
    pt.write_text(text + "\n", encoding="utf-8")
    print(text)
    config = {"simulate": args.simulate, "enumerate": args.enumerate, "limits": args.limits}
    _write_manifest(out, "report", config, sim.get("master_seed") if sim else None, started,
                    [pc, pt])
    return 0 if all(r.ok for r in rows) else EXIT_FAIL


# ---------------------------------------------------------------- parser

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randmap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte Carlo over uniform random mappings")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--reps", type=_positive_int, required=True)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--out", default="out")
    s.add_argument("--dump-replicates", action="store_true")
    s.add_argument("--grid", type=parse_grid, default=montecarlo.default_ecdf_grid(),
                   help="ECDF grid of nu/sqrt(n) as a:b:h (default 0:4:0.05)")
    s.add_argument("--no-ks", dest="ks", action="store_false",
                   help="skip the KS distance against the limit law")
    s.add_argument("--memory-budget", type=_positive_int,
                   default=montecarlo.DEFAULT_MEMORY_BUDGET)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("enumerate", help="exact laws over all n**n mappings")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--threads", type=_positive_int, default=1)
    e.add_argument("--out", default="out")
    e.set_defaults(func=cmd_enumerate)

    lim = sub.add_parser("limits", help="limit densities, CDFs and constants")
    lim.add_argument("--theta", type=_positive_float, default=0.5)
    lim.add_argument("--step", type=_positive_float, default=limits.DEFAULT_STEP)
    lim.add_argument("--xmax", type=_positive_float, default=limits.DEFAULT_XMAX)
    lim.add_argument("--grid", type=parse_grid, default=None,
                     help="x grid on (0, 1] for p, F, f (default 1/xmax steps)")
    lim.add_argument("--ygrid", type=parse_grid, default=None,
                     help="y grid for H (default 0:16:0.05)")
    lim.add_argument("--out", default="out")
    lim.set_defaults(func=cmd_limits)

    r = sub.add_parser("report", help="compare outputs against the published values")
    r.add_argument("--simulate", help="simreport.json from `simulate`")
    r.add_argument("--enumerate", action="append", help="exact_n*.json (repeatable)")
    r.add_argument("--limits", help="constants.json from `limits`")
    r.add_argument("--out", default="out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "enumerate" and not 1 <= args.n <= exact.ENUMERATE_MAX_N:
        parser.error(f"argument --n: enumeration is limited to 1 <= n <= "
                     f"{exact.ENUMERATE_MAX_N} ({args.n}**{args.n} mappings requested)")
    if args.command == "limits":
        if not args.theta <= 1.0:
            parser.error("argument --theta: must lie in (0, 1]")
        if args.step > 1e-3:
            parser.error("argument --step: must be at most 1e-3")
        if args.xmax < 2:
            parser.error("argument --xmax: must be at least 2")
    try:
        return args.func(args)
    except montecarlo.ResourceBudgetError as err:
        print(f"simulate: --threads/--n exceed --memory-budget: {err}", file=sys.stderr)
        return EXIT_FAIL
    except (limits.ConvergenceError, limits.OutOfTableRange) as err:
        print(f"{args.command}: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
