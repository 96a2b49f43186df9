"""Command-line runner: ``qoc optimize | simulate | analytic``.

Every command writes plot-ready CSV files (full double precision, header row,
LF endings) and JSON only for scalar summaries. Exit codes: 0 success, 1 bad
input, 2 optimization finished without converging.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .descent import DescentConfig, dispersion_optimum, heating_optimum, optimize
from .errors import DivergenceError, QOCError
from .model import (
    BlochState,
    PhysicsParams,
    entropy_from_radius,
    energy_variance,
    heating_rate,
    propagate_bloch,
    propagate_z,
)
from .pontryagin import Functional, costate_closed_form_heating, evaluate_cost, solve_costate
from .protocols import (
    AdmissibilityTarget,
    ControlProtocol,
    constant_guess,
    is_admissible,
    read_protocol_csv,
    write_columns,
    write_protocol_csv,
)
from .qsl import bures_angle, minimal_time_certificate

log = logging.getLogger("qoc")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2
ANALYTIC_CASES = ("heating-optimum", "dispersion-optimum", "minimal-time", "costate-oracle")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for non-convergence here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def parse(text):
        value = kind(text)
        if not value > 0 or (isinstance(value, float) and not math.isfinite(value)):
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _common(p, grid=True):
    if grid:
        p.add_argument("--tau", type=_positive(float), default=1.0, help="process duration")
        p.add_argument("--grid-n", type=_positive(int), default=1000, help="number of grid intervals")
    p.add_argument("--out", default=os.environ.get("QOC_OUT_DIR", "."),
                   help="output directory (default: $QOC_OUT_DIR or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qoc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every iteration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="run the admissible steepest descent")
    p.add_argument("--functional", choices=["heating", "dispersion", "qsl"], default="heating")
    _common(p)
    p.add_argument("--epsilon", type=_positive(float), default=0.1, help="step size")
    p.add_argument("--delta", type=_positive(float), default=1e-5, help="termination threshold on |dJ|")
    p.add_argument("--max-iter", type=_positive(int), default=1000)
    p.add_argument("--init", default="constant", help="'constant' or a t,gamma CSV file")
    p.add_argument("--omega0", type=_positive(float), default=1.0)
    p.add_argument("--hbar", type=_positive(float), default=1.0)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="propagate a protocol file")
    p.add_argument("--protocol", required=True, help="t,gamma[,lambda] CSV file")
    p.add_argument("--bloch", action="store_true", help="integrate all three Bloch components")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--z0", type=float, default=1.0)
    p.add_argument("--z-tau", type=float, default=0.0, help="target used for the admissibility residual")
    p.add_argument("--omega0", type=_positive(float), default=1.0)
    p.add_argument("--hbar", type=_positive(float), default=1.0)
    _common(p, grid=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analytic", help="write closed-form reference results")
    p.add_argument("--case", required=True, help=", ".join(ANALYTIC_CASES))
    _common(p)
    p.set_defaults(func=cmd_analytic)
    return parser


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _argv_echo(args) -> list[str]:
    argv = [args.command]
    for key, value in sorted(vars(args).items()):
        if key in ("func", "command", "verbose") or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        argv += [flag] if value is True else [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv


def _masked(func, values, bound):
    # unphysical states (possible with negative rates) are written as nan
    ok = np.abs(values) <= bound
    out = np.full(values.shape, np.nan)
    out[ok] = func(values[ok])
    return out


def trajectory_columns(traj, params: PhysicsParams, with_xy=False, with_angle=True, with_variance=False):
    header, cols = ["t"], [traj.t]
    if with_xy:
        header += ["x", "y"]
        cols += [traj.x, traj.y]
    header += ["z", "heat_rate"]
    cols += [traj.z, heating_rate(traj, params)]
    if with_variance:
        header.append("energy_variance")
        cols.append(_masked(lambda z: energy_variance(z, params), traj.z, 1 + 1e-9))
    header.append("entropy")
    cols.append(_masked(entropy_from_radius, traj.radius(), 1 + 1e-9))
    if with_angle:
        header.append("bures_angle")
        cols.append(_masked(bures_angle, traj.z, 1 + 1e-9))
    return header, cols


def cmd_optimize(args) -> int:
    kind = Functional(args.functional)
    target = AdmissibilityTarget()
    if args.init == "constant":
        initial = constant_guess(target, args.tau, args.grid_n)
    else:
        initial = read_protocol_csv(args.init)
        check = is_admissible(initial, target, 1e-9)
        if not check.admissible:
            raise InputError(f"{args.init}: initial protocol is not admissible, residual {check.residual:.6e}")
    config = DescentConfig(args.epsilon, args.delta, args.max_iter)
    params = PhysicsParams(args.omega0, args.hbar)
    out = _outdir(args)

    diverged = None
    try:
        report = optimize(kind, initial, target, config)
    except DivergenceError as exc:
        if exc.report is None:
            raise
        report, diverged = exc.report, str(exc)

    final = report.final_protocol
    traj = propagate_z(final, target.z0)
    write_protocol_csv(final, out / "protocol.csv", with_lambda=False)
    header, cols = trajectory_columns(traj, params)
    write_columns(out / "trajectory.csv", header, cols)
    recs = report.records
    write_columns(out / "history.csv", ["iter", "J", "residual", "epsilon_used"],
                  [np.array([r.iteration for r in recs]), np.array([r.cost for r in recs]),
                   np.array([r.residual for r in recs]), np.array([r.epsilon_used for r in recs])])
    check = is_admissible(final, target, 1e-9)
    summary = {
        "functional": kind.value,
        "initial_J": report.history[0],
        "final_J": report.final_cost,
        "final_J_heating": evaluate_cost(Functional.HEATING, final, traj),
        "iterations": report.iterations,
        "converged": report.converged,
        "stalled": report.stalled,
        "diverged": diverged is not None,
        "message": diverged or report.message,
        "final_residual": check.residual,
        "negative_gamma_samples": check.negative_samples,
        "final_z": float(traj.z[-1]),
        "config": _config_echo(args),
        "argv": _argv_echo(args),
    }
    _write_json(out / "summary.json", summary)
    print(f"{kind.value}: J {report.history[0]:.6g} -> {report.final_cost:.6g} after "
          f"{report.iterations} iterations ({summary['message']})")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_simulate(args) -> int:
    protocol = read_protocol_csv(args.protocol)
    params = PhysicsParams(args.omega0, args.hbar)
    out = _outdir(args)
    up_state = args.x0 == 0 and args.y0 == 0 and args.z0 == 1
    if args.bloch:
        try:
            s0 = BlochState(args.x0, args.y0, args.z0)
        except QOCError as exc:
            raise InputError(str(exc)) from None
        traj = propagate_bloch(protocol, s0, params)
        header, cols = trajectory_columns(traj, params, with_xy=True, with_angle=up_state, with_variance=True)
    else:
        if args.x0 or args.y0:
            raise InputError("--x0/--y0 need --bloch")
        traj = propagate_z(protocol, args.z0)
        header, cols = trajectory_columns(traj, params, with_angle=up_state, with_variance=True)
    write_columns(out / "trajectory.csv", header, cols)
    try:
        target = AdmissibilityTarget(args.z0, args.z_tau)
    except QOCError:
        print("admissibility residual: n/a (endpoints not reachable by decay)")
    else:
        check = is_admissible(protocol, target, 1e-9)
        print(f"admissibility residual: {check.residual:.6e} "
              f"({'admissible' if check.admissible else 'not admissible'}; "
              f"{check.negative_samples} negative gamma samples)")
    print(f"final z: {traj.z[-1]:.17g}")
    return EXIT_OK


def _reference_case(args, ref) -> int:
    out = _outdir(args)
    write_columns(out / "analytic.csv", ["t", "gamma", "z", "clamped"], [ref.t, ref.gamma, ref.z, ref.clamped])
    sampled = ControlProtocol(args.tau, ref.gamma)
    _write_json(out / "analytic.json", {
        "case": args.case,
        "tau": args.tau,
        "grid_n": args.grid_n,
        "J_star": ref.cost,
        "J_sampled": evaluate_cost(
            Functional.HEATING if args.case == "heating-optimum" else Functional.DISPERSION,
            sampled, propagate_z(sampled, 1.0)),
        "gamma_start": float(ref.gamma[0]),
        "gamma_end": float(ref.gamma[-1]),
        "clamped_nodes": int(np.count_nonzero(ref.clamped)),
    })
    print(f"{args.case}: J* = {ref.cost:.17g}")
    return EXIT_OK


def cmd_analytic(args) -> int:
    if args.case not in ANALYTIC_CASES:
        raise InputError(f"unknown case {args.case!r}; choose from {', '.join(ANALYTIC_CASES)}")
    if args.case == "heating-optimum":
        return _reference_case(args, heating_optimum(args.tau, args.grid_n))
    if args.case == "dispersion-optimum":
        return _reference_case(args, dispersion_optimum(args.tau, args.grid_n))
    out = _outdir(args)
    target = AdmissibilityTarget()
    if args.case == "minimal-time":
        cert = minimal_time_certificate(target, args.tau, args.grid_n)
        write_columns(out / "impulse_sweep.csv", ["width", "J_Q"],
                      [np.array(cert.widths), np.array(cert.costs)])
        _write_json(out / "certificate.json", cert.to_dict())
        print(json.dumps({"tau_star": cert.tau_star, "impulse_weight": cert.impulse_weight}))
        return EXIT_OK
    protocol = constant_guess(target, args.tau, args.grid_n)
    traj = propagate_z(protocol, target.z0)
    p_ode = solve_costate(Functional.HEATING, protocol, traj).p
    p_closed = costate_closed_form_heating(protocol, target.z0).p
    diff = np.abs(p_ode - p_closed)
    write_columns(out / "costate.csv", ["t", "gamma", "z", "p_ode", "p_closed_form", "abs_diff"],
                  [protocol.t, protocol.gamma, traj.z, p_ode, p_closed, diff])
    _write_json(out / "costate.json", {
        "case": args.case,
        "tau": args.tau,
        "grid_n": args.grid_n,
        "p0_ode": float(p_ode[0]),
        "p0_closed_form": float(p_closed[0]),
        "max_abs_diff": float(diff.max()),
    })
    print(f"costate-oracle: max |p_ode - p_closed| = {diff.max():.3e}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, QOCError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
