"""Command-line front end: entropy values, curve sweeps, solves, exact
ensembles, and the Metropolis sampler, emitted as plot-ready CSV or JSON.

Exit codes are part of the contract:

    0  success
    2  domain error (bad argument ranges)
    3  output I/O failure
    4  infeasible constraint target
    5  enumeration capacity exceeded
    6  iterative non-convergence

Output rules: every CSV gets a header row and one trailing comment line with
the package version, a hash of the run configuration, and the tolerances in
play; floats are printed with 17 significant digits; JSON mirrors the CSV
records field-for-field as an array of objects. Identical configurations
(seeds included -- there is no wall-clock seeding anywhere) produce
byte-identical files.
"""

import argparse
import hashlib
import json
import sys

from . import __version__
from .entropy import (
    bernoulli_entropy,
    bernoulli_entropy_deriv,
    bregman_quotient,
    bregman_quotient_min,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    DomainError,
    ErgraphonError,
    InfeasibleError,
)
from .ensembles import count_constrained, mcmc_sample, relative_entropy_exact
from .perturb import solve_microcanonical
from .scaling import CURVE_FIELDS, curve_sweep

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_CAPACITY = 5
EXIT_NONCONVERGENCE = 6

EPS_MAX = 0.1


def _fmt(x) -> str:
    return f"{x:.17g}" if isinstance(x, float) else str(x)


def _config_hash(args: argparse.Namespace) -> str:
    # the hash identifies the computation, not the destination
    skip = ("func", "out")
    payload = json.dumps(
        {k: v for k, v in sorted(vars(args).items()) if k not in skip},
        sort_keys=True,
        default=str,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _emit(rows, fields, args, tolerances="") -> None:
    """Write records as CSV (with meta trailer) or a JSON array."""
    fmt = getattr(args, "format", "csv")
    out_path = getattr(args, "out", None)
    if fmt == "json":
        text = json.dumps([{k: r[k] for k in fields} for r in rows], indent=None) + "\n"
    else:
        lines = [",".join(fields)]
        for r in rows:
            lines.append(",".join(_fmt(r[k]) for k in fields))
        lines.append(
            f"# version={__version__} config={_config_hash(args)} tolerances={tolerances}"
        )
        text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _float_list(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _check_eps_grid(grid) -> None:
    for e in grid:
        if not 0.0 < e <= EPS_MAX:
            raise DomainError(f"eps values must lie in (0, {EPS_MAX}], got {e!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_entropy(args) -> int:
    rows = []
    if args.u is not None:
        if args.k:
            rows.append({
                "quantity": f"I^({args.k})", "arg": args.u,
                "value": bernoulli_entropy_deriv(args.u, args.k),
            })
        else:
            rows.append({"quantity": "I", "arg": args.u,
                         "value": bernoulli_entropy(args.u)})
    if args.t1 is not None:
        if args.fmin:
            res = bregman_quotient_min(args.t1)
            rows.append({"quantity": "quotient_min_x", "arg": args.t1, "value": res.x})
            rows.append({"quantity": "quotient_min_value", "arg": args.t1, "value": res.value})
        elif args.x is not None:
            rows.append({"quantity": "quotient", "arg": args.t1,
                         "value": bregman_quotient(args.t1, args.x)})
    if not rows:
        raise DomainError("nothing requested: pass --u, or --t1 with --x/--fmin")
    _emit(rows, ("quantity", "arg", "value"), args)
    return EXIT_OK


def cmd_curve(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        t1_list = [float(x) for x in cfg.get("t1", [])]
        eps_grid = [float(x) for x in cfg.get("eps", [])]
        side = cfg.get("side", args.side)
    else:
        t1_list = _float_list(args.t1)
        eps_grid = _float_list(args.eps)
        side = args.side
    _check_eps_grid(eps_grid)
    if side in ("above", "both") and any(t == 0.5 for t in t1_list):
        raise DomainError("the above-line rate is undefined at t1 = 1/2")
    rows = curve_sweep(t1_list, eps_grid, side)
    _emit(rows, CURVE_FIELDS, args, tolerances="er_tol=1e-09")
    return EXIT_OK


def cmd_solve(args) -> int:
    report = solve_microcanonical(args.t1, args.t2, mode=args.mode, er_tol=args.er_tol)
    if args.format == "text":
        sys.stdout.write(report.to_text())
    else:
        _emit([report.to_row()], report.ROW_FIELDS, args,
              tolerances=f"residual=1e-10 er_tol={args.er_tol:g}")
    return EXIT_OK


def cmd_exact(args) -> int:
    if args.full:
        sol = relative_entropy_exact(args.n, (args.edges, args.triangles))
        rows = [{
            "n": args.n, "edges": args.edges, "triangles": args.triangles,
            "omega": sol.omega, "theta1": sol.theta.theta1, "theta2": sol.theta.theta2,
            "psi_n": sol.psi_n, "mean_t1": sol.mean_t[0], "mean_t3": sol.mean_t[1],
            "s_n": sol.s_n,
        }]
        fields = ("n", "edges", "triangles", "omega", "theta1", "theta2",
                  "psi_n", "mean_t1", "mean_t3", "s_n")
    else:
        omega = count_constrained(args.n, (args.edges, args.triangles))
        rows = [{"n": args.n, "edges": args.edges, "triangles": args.triangles,
                 "omega": omega}]
        fields = ("n", "edges", "triangles", "omega")
    _emit(rows, fields, args, tolerances="newton=1e-10")
    return EXIT_OK


def cmd_mcmc(args) -> int:
    steps = int(float(args.steps))
    summary = mcmc_sample(args.n, (args.theta1, args.theta2), steps,
                          seed=args.seed, burnin=args.burnin)
    _emit([summary.to_row()], summary.ROW_FIELDS, args, tolerances="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergraphon",
        description="Edge/triangle constrained-graphon calculations near the line t2 = t1^3",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("entropy", help="entropy values, derivatives, quotient minima")
    p.add_argument("--u", type=float)
    p.add_argument("--k", type=int, default=0, help="derivative order (with --u)")
    p.add_argument("--t1", type=float)
    p.add_argument("--x", type=float, help="quotient argument (with --t1)")
    p.add_argument("--fmin", action="store_true", help="quotient minimizer (with --t1)")
    add_io(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("curve", help="scaling-law sweep: closed form vs numeric")
    p.add_argument("--t1", default="0.5,0.6,0.7,0.8", help="comma-separated list")
    p.add_argument("--eps", default="1e-6,1e-5,1e-4,1e-3", help="comma-separated grid")
    p.add_argument("--side", choices=("below", "above", "both"), default="below")
    p.add_argument("--config", help="JSON file with keys t1, eps, side (batch sweeps)")
    add_io(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("solve", help="two-step microcanonical solve")
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--mode", choices=("reduced", "exact_constraints"), default="reduced")
    p.add_argument("--er-tol", type=float, default=1e-9, dest="er_tol",
                   help="treat |t2 - t1^3| below this as the unperturbed point")
    p.add_argument("--format", choices=("csv", "json", "text"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="exact enumeration: counts and relative entropy")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--triangles", type=int, required=True)
    p.add_argument("--full", action="store_true",
                   help="calibrate and report psi, theta, S_n (n <= 7)")
    add_io(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("mcmc", help="edge-flip Metropolis sampling")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--theta2", type=float, required=True)
    p.add_argument("--steps", required=True, help="recorded proposals (1e6 style accepted)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--burnin", type=int, default=None)
    add_io(p)
    p.set_defaults(func=cmd_mcmc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CapacityError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InfeasibleError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConvergenceError,) as exc:
        print(f"error: {exc} diagnostics={exc.diagnostics}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (DomainError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ErgraphonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
