"""
Command-line front end.

Sub-commands: eval, threshold, optimize, simulate, stability. Each prints a
JSON report; file outputs are written atomically and accompanied by a
*.manifest.json. Exit codes: 0 ok, 1 unexpected failure, 2 bad input,
3 numerical inconsistency, 4 no threshold found, 5 conservation violation
under --strict, 6 ground-state gate failed.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from strichartz import __version__
from strichartz.config import (
    ascent_from_settings,
    load_settings,
    quadrature_from_settings,
    snapshot,
    thread_count,
)
from strichartz.dmnls import (
    evolve_dmnls,
    field_from_dict,
    field_to_dict,
    ground_state_from_maximizer,
    mass_P,
    orbit_distance,
    period_for_B,
    stability_experiment,
)
from strichartz.exporter import (
    dumps,
    read_json,
    write_json,
    write_manifest,
    write_snapshots,
    write_threshold_sweep,
    write_trace,
    write_trajectory,
)
from strichartz.functional import (
    a_functional,
    decomposition,
    g_functional,
    strichartz_W,
    strichartz_W_oracle,
)
from strichartz.gradient_opt import canonicalize, maximize_W, solve_B0, threshold_scan
from strichartz.logger import RunAction, RunLogger
from strichartz.models import (
    ConservationError,
    ConsistencyError,
    FourierVector,
    GroundStateError,
    ParameterError,
    PeriodicField,
    RunManifest,
    ThresholdNotFoundError,
)

EXIT_CODES = {
    ParameterError: 2,
    ConsistencyError: 3,
    ThresholdNotFoundError: 4,
    ConservationError: 5,
    GroundStateError: 6,
}

ORACLE_TOLERANCE = 1e-8

# report plus every file written; the first one names the manifest
CommandResult = Tuple[Dict[str, Any], List[Path]]


def _load(path: str) -> Dict[str, Any]:
    try:
        data = read_json(path)
    except (OSError, ValueError) as e:
        raise ParameterError(f"Cannot read {path}: {e}") from e
    if not isinstance(data, dict):
        raise ParameterError(f"{path} must hold a JSON object")
    return data


def load_vector(path: str) -> FourierVector:
    """FourierVector from a coefficient file."""
    return FourierVector.from_dict(_load(path))


def load_field(path: str, L: Optional[float] = None) -> PeriodicField:
    """
    PeriodicField from a field file, a bare coefficient file plus --L, or the
    ground_state entry of an optimize report.
    """
    data = _load(path)
    if "ground_state" in data:
        data = data["ground_state"]
    if L is not None:
        return PeriodicField(L, FourierVector.from_dict(data))
    if "L" not in data:
        raise ParameterError(f"{path} has no period; pass --L")
    return field_from_dict(data)


def _positive(value: Optional[float], name: str):
    if value is not None and not value > 0:
        raise ParameterError(f"--{name} must be positive")


def _out_path(args: argparse.Namespace, settings: Dict[str, Any], default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(settings["output"]["out_dir"]) / default_name


def cmd_eval(args: argparse.Namespace, settings: Dict[str, Any]) -> CommandResult:
    """W_B, its decomposition, A_B and G_B of one coefficient file."""
    _positive(args.B, "B")
    u = load_vector(args.input)
    if u.is_zero():
        raise ParameterError("A_B is undefined for the zero vector")
    report: Dict[str, Any] = {
        "B": args.B,
        "W": strichartz_W(u, args.B),
        "decomposition": decomposition(u, args.B).to_dict(),
        "A": a_functional(u, args.B),
        "G": g_functional(u, args.B),
    }
    if args.verify:
        q = quadrature_from_settings(settings, args.B, u.width)
        oracle = strichartz_W_oracle(u, args.B, q)
        if abs(oracle - report["W"]) > ORACLE_TOLERANCE * abs(report["W"]):
            raise ConsistencyError(f"W_B {report['W']!r} disagrees with quadrature {oracle!r}")
        report["W_quadrature"] = oracle
    if not args.out:
        return report, []
    return report, [write_json(args.out, report)]


def cmd_threshold(args: argparse.Namespace, settings: Dict[str, Any]) -> CommandResult:
    """Sweep max A_B over B for one family and refine where it turns nonpositive."""
    section = settings["threshold"]
    scan_step = args.scan_step if args.scan_step is not None else float(section["scan_step"])
    cfg = ascent_from_settings(settings, seed=args.seed, restarts=args.restarts)
    scan = threshold_scan(
        args.family,
        cfg,
        scan_step=scan_step,
        scan_max=float(section["scan_max"]),
        bisection_width=float(section["bisection_width"]),
        grid_step=float(section["grid_step"]),
        grid_limit=float(section["grid_limit"]),
        nm_starts=int(section["nm_starts"]),
        workers=thread_count(),
    )
    if scan.threshold is None:
        raise ThresholdNotFoundError(f"No sign change of max A_B for family {args.family}")
    out = _out_path(args, settings, f"threshold_family{args.family}.csv")
    report: Dict[str, Any] = {
        "family_id": args.family,
        "threshold": scan.threshold,
        "anomalies": scan.anomalies,
        "sweep": str(out),
    }
    if args.family == 1:
        report["closed_form"] = solve_B0()
    return report, [write_threshold_sweep(out, scan)]


def cmd_optimize(args: argparse.Namespace, settings: Dict[str, Any]) -> CommandResult:
    """Best-found W_B on the unit sphere, canonicalized, with its period-L ground state."""
    _positive(args.B, "B")
    if args.halfwidth < 1:
        raise ParameterError("--halfwidth must be >= 1")
    cfg = ascent_from_settings(settings, seed=args.seed, restarts=args.restarts)
    result = maximize_W(args.B, args.halfwidth, cfg, workers=thread_count())
    argmax = canonicalize(result.argmax)
    L = period_for_B(args.B)
    report = {
        "B": args.B,
        "halfwidth": args.halfwidth,
        "value": result.value,
        "iterations": result.iterations,
        "converged": result.converged,
        "grad_norm": result.grad_norm,
        "argmax": argmax.to_dict(),
        "ground_state": field_to_dict(ground_state_from_maximizer(argmax, L, args.mass)),
    }
    out = _out_path(args, settings, f"optimize_B{args.B:g}_h{args.halfwidth}.json")
    written = [write_json(out, report), write_trace(out.with_suffix(".trace.csv"), result.trace)]
    return report, written


def cmd_simulate(args: argparse.Namespace, settings: Dict[str, Any]) -> CommandResult:
    """Integrate the DMNLS flow from an initial field."""
    section = settings["dmnls"]
    dt = args.dt if args.dt is not None else float(section["dt"])
    horizon = args.horizon if args.horizon is not None else float(section["horizon"])
    _positive(horizon, "horizon")
    u0 = load_field(args.input, args.L)
    tolerance = float(section["drift_tolerance"])
    trajectory = evolve_dmnls(u0, dt, horizon, drift_warning=tolerance)
    dH, dP = trajectory.relative_drift()
    if args.strict and trajectory.warnings:
        raise ConservationError("; ".join(trajectory.warnings))

    out = _out_path(args, settings, "trajectory.csv")
    written = [
        write_trajectory(out, trajectory),
        write_json(out.with_suffix(".final.json"), field_to_dict(trajectory.states[-1])),
    ]
    if args.snapshot_stride:
        written += write_snapshots(out.with_suffix(""), trajectory, args.snapshot_stride)
    report = {
        "L": u0.L,
        "dt": dt,
        "horizon": horizon,
        "steps_recorded": len(trajectory.times),
        "final_time": trajectory.times[-1],
        "drift": {"H": dH, "P": dP},
        "warnings": list(trajectory.warnings),
        "trajectory": str(out),
    }
    return report, written


def cmd_stability(args: argparse.Namespace, settings: Dict[str, Any]) -> CommandResult:
    """Perturb a ground state, evolve it and report its distance to the orbit."""
    section = settings["dmnls"]
    dt = args.dt if args.dt is not None else float(section["dt"])
    horizon = args.horizon if args.horizon is not None else float(section["horizon"])
    _positive(horizon, "horizon")
    phi = load_field(args.input, args.L)
    seed = args.seed if args.seed is not None else int(settings["ascent"]["seed"])
    result = stability_experiment(
        phi,
        args.epsilon,
        horizon,
        dt,
        None,
        seed,
        shift_grid=int(section["shift_grid"]),
        sample_stride=int(section["sample_stride"]),
        residual_gate=float(section["residual_gate"]),
    )
    report = result.to_dict()
    report["mass"] = mass_P(phi)
    out = _out_path(args, settings, "stability.json")
    written = [
        write_json(out, report),
        write_trajectory(out.with_suffix(".trajectory.csv"), result.trajectory, result.orbit_distances),
    ]
    return report, written


COMMANDS: Dict[str, Callable[[argparse.Namespace, Dict[str, Any]], CommandResult]] = {
    "eval": cmd_eval,
    "threshold": cmd_threshold,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "stability": cmd_stability,
}

ACTIONS = {
    "eval": RunAction.EVALUATE,
    "threshold": RunAction.THRESHOLD,
    "optimize": RunAction.OPTIMIZE,
    "simulate": RunAction.SIMULATE,
    "stability": RunAction.STABILITY,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strichartz", description="Torus Strichartz functional toolkit"
    )
    parser.add_argument("--settings", default=None, help="settings.json path")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate W_B, its decomposition, A_B and G_B")
    p.add_argument("input", help="coefficient file")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--verify", action="store_true", help="cross-check W_B by quadrature")
    p.add_argument("--out")

    p = sub.add_parser("threshold", help="threshold of max A_B > 0 for a test family")
    p.add_argument("--family", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--scan-step", dest="scan_step", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--out")

    p = sub.add_parser("optimize", help="maximize W_B on the unit sphere")
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--halfwidth", type=int, default=2)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mass", type=float, default=1.0, help="mass P of the reported ground state")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="integrate the DMNLS flow")
    p.add_argument("input", help="initial field file")
    p.add_argument("--L", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--strict", action="store_true", help="fail on conservation drift")
    p.add_argument("--snapshot-stride", dest="snapshot_stride", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("stability", help="perturbed ground-state experiment")
    p.add_argument("input", help="ground-state field file or optimize report")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--L", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = load_settings(args.settings)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    run_logger = RunLogger(settings["output"]["log_dir"])
    try:
        return _run(args, argv, settings, run_logger)
    finally:
        run_logger.close()


def _run(
    args: argparse.Namespace, argv: List[str], settings: Dict[str, Any], run_logger: RunLogger
) -> int:
    started = time.perf_counter()
    try:
        report, written = COMMANDS[args.command](args, settings)
    except tuple(EXIT_CODES) as e:
        code = next(c for cls, c in EXIT_CODES.items() if isinstance(e, cls))
        run_logger.log_error(e, args.command)
        print(f"error: {e}", file=sys.stderr)
        return code
    except Exception as e:
        run_logger.log_error(e, args.command)
        print(f"error: {e}", file=sys.stderr)
        return 1

    wall_time = time.perf_counter() - started
    if written:
        config = snapshot(settings)
        config["arguments"] = {k: v for k, v in vars(args).items() if k != "settings"}
        manifest = write_manifest(
            written[0],
            RunManifest(
                command=" ".join(["strichartz", *argv]),
                config=config,
                seed=getattr(args, "seed", None),
                tool_version=__version__,
                wall_time=wall_time,
                outputs=[str(path) for path in written],
            ),
        )
        run_logger.log_action(RunAction.EXPORT, str(manifest), {"files": len(written)})
    run_logger.log_action(ACTIONS[args.command], args.command, {"wall_time": f"{wall_time:.3f}s"})
    print(dumps(report), end="")
    return 0
