"""Command line entry point: ``polarswim <verb> --config PATH``.

Exit codes: 0 success, 1 numeric failure, 2 config error, 3 check failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, dump_config, load_config
from .diagnostics import relative_energy
from .io import write_timeseries
from .timestep import AprioriBoundViolation, NonFinite

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3

__all__ = ["main", "build_parser"]


def _eps_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty eps list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polarswim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--seed", type=int, default=None, help="override [init] seed")
        return p

    p = verb("simulate", "integrate one run, write snapshots and energy.csv")
    p.add_argument("--out", metavar="DIR", help="output directory (default [output] dir)")
    p = verb("sweep", "epsilon sweep against the decoupled run")
    p.add_argument("--eps", type=_eps_list, required=True, metavar="LIST",
                   help="comma separated, strictly decreasing")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--workers", type=int, default=1, help="process pool size")
    p = verb("twin", "spectral integrator against the Galerkin oracle")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-8)
    p = verb("check", "run the invariant suite")
    p.add_argument("--filter", action="append", metavar="NAME",
                   help="check name (repeatable or comma separated)")
    verb("dump-config", "print the canonical configuration")
    return ap


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _out_dir(args, cfg) -> Path | None:
    out = getattr(args, "out", None) or cfg.out_dir
    return Path(out) if out else None


def _simulate(args, cfg, params) -> int:
    from .experiments import simulate

    out = _out_dir(args, cfg) or Path("out")
    res = simulate(cfg, params, out)
    led = res.ledger
    n = len(res.traj.states)
    print(f"steps={round(res.traj.times[-1] / res.traj.dt)} dt={res.traj.dt:.6g} samples={n}")
    if led is not None:
        e0 = led["E"][0]
        defect = float(np.max(np.abs(led["balance_defect"])))
        print(f"E(0)={e0:.6e} E(T)={led['E'][-1]:.6e} max|balance_defect|/E(0)="
              f"{defect / e0 if e0 else math.nan:.3e}")
    print(f"wrote {len(res.files)} files to {out}")
    return EXIT_OK


def _sweep(args, cfg, params) -> int:
    from .experiments import epsilon_sweep

    res = epsilon_sweep(cfg, params, args.eps, out_dir=_out_dir(args, cfg),
                        workers=args.workers)
    print(f"{'eps':>10} {'p_distance':>14} {'u_sq_integral':>14}")
    for e, d, u in zip(res.eps, res.p_distance, res.u_sq_integral):
        print(f"{e:10.3g} {d:14.6e} {u:14.6e}")
    if res.sufficient:
        print(f"p slope {res.p_slope:.4f}, u slope {res.u_slope:.4f}, "
              f"monotone {'yes' if res.monotone else 'no'}")
    else:
        print(res.note)
    return EXIT_OK


def _twin(args, cfg, params) -> int:
    from .experiments import twin_run

    res = twin_run(cfg, params, steps=args.steps, tol=args.tol)
    rep = res.report
    out = _out_dir(args, cfg)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        dist = [math.sqrt(2.0 * relative_energy(cfg.grid, a.p_hat, b.p_hat))
                for a, b in zip(res.spectral.states, res.galerkin.states)]
        write_timeseries(out / "twin.csv", ("t", "distance"),
                         {"t": res.spectral.times, "distance": dist})
    print(f"max distance {rep.max_distance:.3e}, terminal {rep.terminal_distance:.3e}, "
          f"tol {res.tol:.1e}: {'PASS' if res.passed else 'FAIL'}")
    return EXIT_OK if res.passed else EXIT_CHECK


def _check(args, cfg, params) -> int:
    from .checks import CHECKS, format_table, run_checks

    names = None
    if args.filter:
        names = [n.strip() for f in args.filter for n in f.split(",") if n.strip()]
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            _err(f"unknown check(s) {', '.join(unknown)}; available: {', '.join(CHECKS)}")
            return EXIT_CONFIG
    results = run_checks(cfg, params, names)
    print(format_table(results), end="")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_CHECK if failed else EXIT_OK


def _dump(args, cfg, params) -> int:
    print(dump_config(cfg, params), end="")
    return EXIT_OK


VERBS = {"simulate": _simulate, "sweep": _sweep, "twin": _twin, "check": _check,
         "dump-config": _dump}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, params = load_config(args.config, seed=args.seed)
    except ConfigError as exc:
        _err(f"{args.config}: config error: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"{args.config}: {exc}")
        return EXIT_CONFIG
    try:
        return VERBS[args.verb](args, cfg, params)
    except (NonFinite, AprioriBoundViolation) as exc:
        _err(f"numeric failure: {exc}")
        return EXIT_NUMERIC
    except ValueError as exc:  # bad eps list and similar argument errors
        _err(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
