"""sweep: cumulative DD error over exponentially increasing noise variance."""

import logging
from pathlib import Path

import numpy as np

from app.commands import load_controller, load_system, parse_levels, parse_vector, run_parameters
from app.control.sim import noise_sweep
from app.reports import finish_manifest, plot_sweep, start_manifest, write_csv

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="noise sweep of e_cum(T) for several controllers")
    parser.add_argument("--system", type=Path, required=True)
    parser.add_argument("--controllers", type=Path, nargs="+", required=True)
    parser.add_argument("--l", dest="levels", type=parse_levels, default=list(range(7, 21)),
                        help="variance exponents, LOW:HIGH inclusive (default 7:20)")
    parser.add_argument("--T", dest="horizon", type=float, default=10.0)
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--x0", type=parse_vector, help="initial state (default 0)")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--plot", type=Path, help="also render an SVG figure")
    parser.set_defaults(handler=run)


def run(args, settings) -> int:
    params = run_parameters(args)
    params["x0"] = None if args.x0 is None else args.x0.tolist()
    manifest = start_manifest("sweep", params, seed=args.seed, inputs=[args.system, *args.controllers])
    system = load_system(args.system)
    x0 = np.zeros(system.n) if args.x0 is None else args.x0
    controllers = [(path.stem, load_controller(path).gain()) for path in args.controllers]

    frame = noise_sweep(system, controllers, x0, args.levels, args.horizon, args.trials, args.seed,
                        settings.sim_dt, settings.workers)
    outputs = [write_csv(frame, args.out)]
    if args.plot:
        outputs.append(plot_sweep(frame, args.plot))
    finish_manifest(manifest, args.out, outputs)
    return 0
