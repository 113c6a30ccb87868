"""Command-line entry point ``surfelast``.

Subcommands
-----------
``run CONFIG``
    Execute a JSON run configuration, writing per-step VTK files and the run
    log CSV below ``<output dir>/<config name>/``. The output directory comes
    from ``--output``, else ``$SURFELAST_OUTPUT_DIR``, else the config.
``oracle catenoid | bridge-ode | onset``
    Evaluate a reference solution and emit CSV on stdout (or ``--out``).
``verify [--seed N]``
    Run the property suite and print a pass/fail table.

Exit codes: 0 success, 1 verify failure, 2 invalid configuration or
arguments, 3 solver failure, 4 oracle failure.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import config as cfgmod
from . import oracles as orc
from . import verify as vf
from .errors import (ExistenceError, InputError, NonConvergenceError, SolverFailure,
                     SurfelastError)
from .io import write_csv

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER, EXIT_ORACLE = 0, 1, 2, 3, 4

log = logging.getLogger("surfelast")


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def _cmd_run(args) -> int:
    from . import experiments as ex  # heavy imports only when running a model

    try:
        cfg = cfgmod.load(args.config)
    except cfgmod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.no_vtk:
        cfg.output.vtk = False
    try:
        res = ex.run(cfg, write=True, outdir=args.output)
    except SolverFailure as exc:
        print(f"error: solver failure at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fin = res.final
    print(f"completed {len(res.states)} steps; final {fin.control} state stable={fin.stable} "
          f"n_neg={fin.n_negative} energy={fin.energy:.10g}")
    for ph in res.phases:
        if ph.result.onset is not None:
            lo, hi = ph.result.onset
            print(f"phase {ph.name}: loss of stability between {ph.control}={lo:.6g} and {hi:.6g}")
    print(f"artifacts in {res.outdir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------

#: columns emitted by each oracle subcommand
ORACLE_COLUMNS = {
    "catenoid": ("L", "R", "C", "C_over_R"),
    "catenoid-profile": ("x", "y"),
    "bridge-ode": ("L", "R", "w0", "neck_radius", "iterations"),
    "bridge-ode-profile": ("x", "u", "w", "radius"),
    "onset": ("lambda", "alpha_t", "gamma_t", "kappa_t", "a", "iterations"),
}


@contextlib.contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as f:
            yield f


def _check_oracle_args(args) -> None:
    if args.which == "onset":
        if not args.grid and sum(v is not None for v in (args.lam, args.alpha, args.gamma)) != 2:
            raise InputError("onset needs exactly two of --lambda, --alpha, --gamma (or --grid)")
    else:
        orc.BridgeGeometry(args.L, args.R)
        if args.profile is not None and args.profile < 2:
            raise InputError("--profile needs at least 2 samples")


def _cmd_oracle(args) -> int:
    try:
        _check_oracle_args(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows, key = _oracle_rows(args)
    except (ExistenceError, NonConvergenceError, InputError) as exc:
        print(f"error: oracle failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    with _sink(args.out) as f:
        write_csv(f, rows, ORACLE_COLUMNS[key])
    return EXIT_OK


def _oracle_rows(args):
    if args.which == "catenoid":
        g = orc.BridgeGeometry(args.L, args.R)
        C = orc.catenoid_constant(g)
        if args.profile:
            x = np.linspace(-g.L / 2, g.L / 2, args.profile)
            y = orc.catenoid_profile(g, x)
            return [{"x": a, "y": b} for a, b in zip(x, y)], "catenoid-profile"
        return [{"L": g.L, "R": g.R, "C": C, "C_over_R": C / g.R}], "catenoid"
    if args.which == "bridge-ode":
        g = orc.BridgeGeometry(args.L, args.R)
        prof = orc.minimal_stretch_profile(g, n=args.steps)
        if args.profile:
            idx = np.unique(np.linspace(0, len(prof.x) - 1, args.profile).round().astype(int))
            return [{"x": prof.x[i], "u": prof.u[i], "w": prof.w[i], "radius": g.R - prof.w[i]}
                    for i in idx], "bridge-ode-profile"
        return [{"L": g.L, "R": g.R, "w0": prof.w[0], "neck_radius": prof.neck_radius,
                 "iterations": prof.iterations}], "bridge-ode"
    # onset
    pts: List[orc.BifurcationPoint] = []
    if args.grid:
        for al, curve in orc.onset_grid(kappa_t=args.kappa).items():
            pts.extend(curve)
    else:
        pts.append(orc.bifurcation_onset(args.kappa, lam=args.lam, alpha_t=args.alpha,
                                         gamma_t=args.gamma))
    return [{"lambda": p.lam, "alpha_t": p.alpha_t, "gamma_t": p.gamma_t, "kappa_t": p.kappa_t,
             "a": p.a, "iterations": p.iterations} for p in pts], "onset"


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

def _cmd_verify(args) -> int:
    names = None
    if args.only:
        known = set(vf.check_names())
        unknown = [n for n in args.only if n not in known]
        if unknown:
            print(f"error: unknown properties {unknown}", file=sys.stderr)
            return EXIT_CONFIG
        names = args.only
    results = vf.run_checks(args.seed, names)
    print(vf.format_report(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failing properties: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="surfelast",
                                description="Finite elements with surface-polyconvex energies.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a JSON run configuration")
    r.add_argument("config", help="path to the JSON configuration")
    r.add_argument("--output", help="output base directory (overrides env and config)")
    r.add_argument("--no-vtk", action="store_true", help="write only the run log")
    r.set_defaults(func=_cmd_run)

    o = sub.add_parser("oracle", help="reference solutions as CSV")
    osub = o.add_subparsers(dest="which", required=True)
    for name, hlp in (("catenoid", "catenoid constant, or profile with --profile N"),
                      ("bridge-ode", "minimal-stretch bridge, or profile with --profile N")):
        q = osub.add_parser(name, help=hlp)
        q.add_argument("--L", type=float, default=3.0, help="bridge length (default 3)")
        q.add_argument("--R", type=float, default=2.5, help="clamp radius (default 2.5)")
        q.add_argument("--profile", type=int, metavar="N", help="emit N profile samples instead")
        q.add_argument("--out", help="write the CSV here instead of stdout")
        if name == "bridge-ode":
            q.add_argument("--steps", type=int, default=10000, help="integration steps")
    q = osub.add_parser("onset", help="bifurcation onset of a stretched cylinder")
    q.add_argument("--lambda", dest="lam", type=float, help="axial prestretch")
    q.add_argument("--alpha", type=float, help="alpha_t = alpha/(mu R)")
    q.add_argument("--gamma", type=float, help="gamma_t = gamma/(mu R)")
    q.add_argument("--kappa", type=float, default=4.0, help="kappa_t = kappa/mu (default 4)")
    q.add_argument("--grid", action="store_true", help="sweep the standard (lambda, alpha) grid")
    q.add_argument("--out", help="write the CSV here instead of stdout")
    o.set_defaults(func=_cmd_oracle)

    v = sub.add_parser("verify", help="run the property suite")
    v.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    v.add_argument("--only", nargs="+", metavar="NAME", help="run only these properties")
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.verbose == 0 and args.command == "verify":
        # expected fallbacks inside the suite are not news
        logging.getLogger("surfelast.solver").setLevel(logging.ERROR)
    try:
        return args.func(args)
    except SurfelastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
