"""Command-line front end: ``singbif <subcommand> [options]``.

Exit status: 0 success, 1 a verification or acceptance check failed,
2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import io as sio
from .continuation import branch_point, dirichlet_scan, solve_lambda, trace_branch
from .errors import BracketError, DomainError
from .estimates import verify_point
from .phi import extrapolate_limits, phi, phi_limits
from .radial import integrate
from .specfun import build_eigen_table


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", help="JSON file with RunConfig keys")
    g.add_argument("--radius", type=float, help="ball radius R (default 1)")
    g.add_argument("--tol-ode", type=float, dest="tol_ode", help="ODE tolerance (default 1e-10)")
    g.add_argument("--tol-quad", type=float, dest="tol_quad", help="quadrature tolerance (default 1e-10)")
    g.add_argument("--tol-shoot", type=float, dest="tol_shoot", help="branch tracing tolerance (default 1e-11)")
    g.add_argument("--tol-verify", type=float, dest="tol_verify", help="inequality slack (default 1e-7)")
    g.add_argument("--format", choices=("csv", "json"), help="table format (default csv)")
    g.add_argument("--out", help="output path (default stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="singbif", description="Radial Neumann problem with a singular nonlinearity: branches, estimates, sandbox."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", parents=[common], help="Bessel zeros and radial eigenvalues")
    p.add_argument("--kmax", type=int, help="number of rows (default from config, 3)")

    p = sub.add_parser("shoot", parents=[common], help="one radial trajectory")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--tol", type=float, help="alias for --tol-ode")
    p.add_argument("--figure", help="PNG of the profile")

    p = sub.add_parser("phi", parents=[common], help="time map value or its limits")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--h", type=float)
    p.add_argument("--s", type=float, help="evaluation point between 0 and h (default h)")
    p.add_argument("--limits", action="store_true", help="analytic and extrapolated limits")
    p.add_argument("--raw", action="store_true", help="unnormalized integral (no 1/sqrt(2))")

    p = sub.add_parser("branch", parents=[common], help="trace one nodal branch")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sign", choices=("+", "-"), default="+")
    p.add_argument("--hmax", type=float, help="stop once sup w reaches this (default 50)")
    p.add_argument("--figure", help="PNG of this branch in the diagram")

    p = sub.add_parser("diagram", parents=[common], help="SVG bifurcation diagram with CSV sidecar")
    p.add_argument("--kmax", type=int)
    p.add_argument("--hmax", type=float)
    p.add_argument("--signs", default="+-", help="which branch families to draw (default +-)")
    p.add_argument("--figure", help="additional matplotlib PNG")

    p = sub.add_parser("verify", parents=[common], help="inequality suite on a branch CSV")
    p.add_argument("--branch", required=True, help="CSV written by the branch subcommand")
    p.add_argument("--report", help="JSON report path")
    p.add_argument(
        "--reading",
        choices=("literal", "sign-aware"),
        default="literal",
        help="lambda bounds on every segment (literal) or lower bound halved on negative segments",
    )
    p.add_argument("--samples", type=int, default=50)

    p = sub.add_parser("dirichlet-scan", parents=[common], help="search for radial Dirichlet solutions")
    p.add_argument("--lambda-min", type=float, default=1.0)
    p.add_argument("--lambda-max", type=float, default=30.0)
    p.add_argument("--h-min", type=float, help="default -0.9/sqrt(lambda) per row")
    p.add_argument("--h-max", type=float, default=20.0)
    p.add_argument("--grid", help="NxM (default from config, 200x200)")

    p = sub.add_parser("sandbox", parents=[common], help="finite-dimensional two-branch construction")
    p.add_argument("--model", default="default", help="default, galerkin or a JSON model file")
    p.add_argument("--rho-sweep", nargs="+", type=float, default=[0.2, 0.1, 0.05, 0.02])
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--no-levels", action="store_true", help="skip the level-value optimizations")
    p.add_argument("--figure", help="PNG of the multiplier convergence")
    return parser


def _config(args):
    overrides = {
        "radius": args.radius,
        "tol_ode": args.tol_ode,
        "tol_quad": args.tol_quad,
        "tol_shoot": args.tol_shoot,
        "tol_verify": args.tol_verify,
        "format": args.format,
        "out": args.out,
    }
    if getattr(args, "kmax", None) is not None:
        overrides["kmax"] = args.kmax
    if getattr(args, "hmax", None) is not None:
        overrides["h_max"] = args.hmax
    if getattr(args, "grid", None):
        try:
            n, m = (int(x) for x in args.grid.lower().split("x"))
        except ValueError:
            raise sio.ConfigError(f"grid: expected NxM, got {args.grid!r}") from None
        overrides["grid"] = [n, m]
    if getattr(args, "tol", None) is not None:
        overrides["tol_ode"] = args.tol
    return sio.parse_config(overrides, args.config)


def _emit_text(text: str, path) -> None:
    if path:
        Path(path).write_bytes(text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def _emit_table(cfg, header, rows) -> None:
    if cfg.format == "json":
        _emit_text(sio.json_text([dict(zip(header, r)) for r in rows]), cfg.out)
    else:
        _emit_text(sio.csv_text(header, rows), cfg.out)


# ---------------------------------------------------------------- commands


def cmd_eigen(args, cfg) -> int:
    table = build_eigen_table(cfg.radius, cfg.kmax)
    _emit_table(cfg, ["k", "y_k", "z_k", "mu_k", "nu_k"], list(table.rows()))
    return 0


def _segment_dict(seg) -> dict:
    return {
        "r1": seg.r1,
        "r2": seg.r2,
        "case": seg.case,
        "rho_bar": seg.rho_bar,
        "rho0": seg.rho0,
        "h": seg.h,
        "log_gap_h": seg.log_gap_h,
        "complete": seg.complete,
    }


def cmd_shoot(args, cfg) -> int:
    traj = integrate(args.lam, args.h, cfg.radius, cfg.tol_ode)
    summary = {
        "lambda": traj.lam,
        "h": traj.h,
        "R": traj.R,
        "nodes": list(traj.nodes),
        "crits": [{"rho": c[0], "w": c[1], "log_gap": c[2]} for c in traj.crits],
        "segments": [_segment_dict(s) for s in traj.segments],
        "barrier_min": traj.barrier_min,
        "log_barrier_min": traj.log_barrier_min,
        "residual": traj.residual,
        "barrier_crossings": traj.n_walls,
    }
    rows = list(zip(traj.grid, traj.w, traj.dw))
    if cfg.out:
        sio.write_csv(cfg.out, ["rho", "w", "dw"], rows)
        sio.write_json(Path(cfg.out).with_suffix(".json"), summary)
    else:
        sys.stdout.write(sio.json_text(summary))
    if args.figure:
        from .plotting import profile_figure

        profile_figure(traj, args.figure)
    return 0


def cmd_phi(args, cfg) -> int:
    normalized = not args.raw
    if args.limits:
        exact = phi_limits(args.lam, normalized=normalized)
        numeric = extrapolate_limits(args.lam, normalized=normalized, tol=min(cfg.tol_quad, 1e-12))
        out = {key: {"analytic": exact[key], "numerical": numeric[key]} for key in exact}
        _emit_text(sio.json_text(out), cfg.out)
        return 0
    if args.h is None:
        raise sio.ConfigError("h: required unless --limits is given")
    s = args.h if args.s is None else args.s
    ev = phi(args.lam, args.h, s, cfg.tol_quad, normalized=normalized)
    _emit_text(sio.json_text({"lambda": ev.lam, "h": ev.h, "s": ev.s, "value": ev.value, "error": ev.err_est}), cfg.out)
    return 0


def _trace(cfg, k, sign):
    return trace_branch(
        k, sign, cfg.radius, cfg.h_max, h_min=cfg.h_min, ratio=cfg.step_ratio, tol=cfg.tol_shoot
    )


def cmd_branch(args, cfg) -> int:
    branch = _trace(cfg, args.k, 1 if args.sign == "+" else -1)
    rows = sio.branch_rows(branch)
    if cfg.format == "json":
        _emit_text(
            sio.json_text(
                {
                    "k": branch.k,
                    "sign": branch.sign,
                    "R": branch.R,
                    "termination": branch.termination,
                    "origin_lambda": branch.origin_lambda,
                    "asymptote_lambda": branch.asymptote_lambda,
                    "points": [dict(zip(sio.BRANCH_HEADER, r)) for r in rows],
                }
            ),
            cfg.out,
        )
    else:
        _emit_text(sio.csv_text(sio.BRANCH_HEADER, rows), cfg.out)
    print(
        f"{len(branch.points)} points, termination: {branch.termination}, "
        f"origin {branch.origin_lambda}, asymptote {branch.asymptote_lambda}",
        file=sys.stderr,
    )
    if args.figure:
        from .plotting import diagram_figure

        diagram_figure([branch], build_eigen_table(cfg.radius, 2 * args.k), args.figure)
    return 0


def cmd_diagram(args, cfg) -> int:
    if not cfg.out:
        raise sio.ConfigError("out: diagram needs an output path")
    signs = [1 if c == "+" else -1 for c in args.signs if c in "+-"]
    if not signs:
        raise sio.ConfigError("signs: use + and/or -")
    branches = [_trace(cfg, k, s) for k in range(1, cfg.kmax + 1) for s in signs]
    table = build_eigen_table(cfg.radius, 2 * cfg.kmax)
    sio.emit_diagram(branches, table, cfg.out)
    if args.figure:
        from .plotting import diagram_figure

        diagram_figure(branches, table, args.figure)
    return 0


def _resolve_point(rec, R, tol):
    """Re-solve lambda for the stored h, starting from a narrow bracket."""
    lam = rec["lambda"]
    for width in (1e-9, 1e-6, 1e-3, 1e-1):
        try:
            return solve_lambda(rec["k"], rec["h"], (lam * (1 - width), lam * (1 + width)), R, tol)
        except BracketError:
            continue
    return branch_point(math.sqrt(lam) * rec["h"], rec["k"], R, tol)


def cmd_verify(args, cfg) -> int:
    records = sio.read_branch_csv(args.branch)
    points = []
    all_pass = True
    for rec in records:
        pt = _resolve_point(rec, cfg.radius, cfg.tol_shoot)
        report = verify_point(pt.trajectory, cfg.tol_verify, reading=args.reading, n_samples=args.samples)
        entry = {"idx": rec["idx"], "k": rec["k"], "lambda_file": rec["lambda"], **report.as_dict()}
        points.append(entry)
        all_pass &= report.passed
    failed = sorted({name for p in points for name in p.get("failures", [])})
    out = {"branch": str(args.branch), "reading": args.reading, "pass": all_pass, "failed_checks": failed, "points": points}
    target = args.report or cfg.out
    if target:
        sio.write_json(target, out)
    print(f"{len(points)} points, {'all checks pass' if all_pass else 'failures: ' + ', '.join(failed)}", file=sys.stderr)
    return 0 if all_pass else 1


def cmd_dirichlet(args, cfg) -> int:
    rep = dirichlet_scan(
        (args.lambda_min, args.lambda_max), (args.h_min, args.h_max), tuple(cfg.grid), cfg.radius, cfg.tol_ode
    )
    _emit_text(sio.json_text(rep.summary()), cfg.out)
    return 0


def cmd_sandbox(args, cfg) -> int:
    from . import sandbox as sb

    if args.model == "default":
        model = sb.default_model()
    elif args.model == "galerkin":
        model = sb.galerkin_model()
    else:
        model = sb.load_model(args.model)
    report = sb.sweep(model, tuple(args.rho_sweep), with_levels=not args.no_levels)
    report["regime_check"] = sb.regime_report(model, args.rho_sweep)
    report["hypotheses"] = sb.hypothesis_report(model)
    target = args.report or cfg.out
    if target:
        sio.write_json(target, report)
    else:
        sys.stdout.write(sio.json_text(report))
    if args.figure:
        from .plotting import sweep_figure

        sweep_figure(report, args.figure)
    return 0


COMMANDS = {
    "eigen": cmd_eigen,
    "shoot": cmd_shoot,
    "phi": cmd_phi,
    "branch": cmd_branch,
    "diagram": cmd_diagram,
    "verify": cmd_verify,
    "dirichlet-scan": cmd_dirichlet,
    "sandbox": cmd_sandbox,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
    except sio.ConfigError as exc:
        parser.error(str(exc))
    try:
        return COMMANDS[args.command](args, cfg)
    except sio.ConfigError as exc:
        parser.error(str(exc))
    except (DomainError, ArithmeticError, RuntimeError) as exc:
        print(f"singbif: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
