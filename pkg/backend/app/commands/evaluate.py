"""eval: metrics table for a set of controller files."""

import logging
from pathlib import Path

from app.commands import load_controller, load_system, run_parameters
from app.control.ddpf import evaluate_controller
from app.control.geometry import largest_ci_subspace
from app.reports import finish_manifest, metrics_frame, start_manifest, write_csv

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="evaluate f_alpha, f_gain, f_h2 and f_dd per controller")
    parser.add_argument("--system", type=Path, required=True)
    parser.add_argument("--controller", type=Path, nargs="+", required=True)
    parser.add_argument("--out", type=Path, required=True)
    parser.set_defaults(handler=run)


def run(args, settings) -> int:
    manifest = start_manifest("eval", run_parameters(args), inputs=[args.system, *args.controller])
    system = load_system(args.system)
    tol = settings.tolerance()
    V = largest_ci_subspace(system, tol)

    rows = []
    for path in args.controller:
        F = load_controller(path).gain()
        metrics = evaluate_controller(system, V, F, tol, settings.h2_horizon, settings.h2_dt)
        rows.append((str(path), metrics))

    write_csv(metrics_frame(rows), args.out)
    finish_manifest(manifest, args.out, [args.out])
    return 0
