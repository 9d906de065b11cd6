"""examples: the two illustrative plants and the DD versus H2-SDP comparison data."""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from app.commands import run_parameters
from app.control.executor import SynthesisExecutor, SynthesisMode
from app.control.h2 import impulse_response
from app.control.sim import DisturbanceSpec, simulate
from app.models import example_system
from app.reports import finish_manifest, plot_series, start_manifest, write_csv
from app.schemas import ControllerFile, SystemFile, write_model

logger = logging.getLogger(__name__)

COMPARISON_HORIZON = 10.0
COMPARISON_LEVEL = 20


def comparison_frame(system, F_dd: np.ndarray, F_h2: np.ndarray, seed: int, dt: float) -> pd.DataFrame:
    """Impulse response norms and e_cum under variance 2^20 for both controllers."""
    dist = DisturbanceSpec.gaussian(2.0 ** COMPARISON_LEVEL, seed)
    x0 = np.zeros(system.n)
    dd_trace = simulate(system, F_dd, x0, dist, COMPARISON_HORIZON, dt)
    h2_trace = simulate(system, F_h2, x0, dist, COMPARISON_HORIZON, dt)
    t = dd_trace.tgrid
    return pd.DataFrame({
        "t": t,
        "g_dd": [np.linalg.norm(g) for g in impulse_response(system, F_dd, t)],
        "g_h2": [np.linalg.norm(g) for g in impulse_response(system, F_h2, t)],
        "e_cum_dd": dd_trace.e_cum,
        "e_cum_h2": h2_trace.e_cum,
    })


def register(subparsers) -> None:
    parser = subparsers.add_parser("examples", help="write the illustrative plants and comparison data")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--plot", action="store_true", help="also render SVG figures")
    parser.set_defaults(handler=run)


def run(args, settings) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    manifest = start_manifest("examples", run_parameters(args), seed=args.seed)
    executor = SynthesisExecutor(settings.executor_config())
    outputs = []

    for which in (1, 2):
        system = example_system(which)
        outputs.append(write_model(SystemFile.from_system(system), args.out / f"{system.name}.json"))
        gains = {}
        for mode in (SynthesisMode.DD_ONLY, SynthesisMode.H2_SDP):
            result = executor.execute(system, mode)
            gains[mode] = result.F
            path = args.out / f"{system.name}_{mode.value}.json"
            outputs.append(write_model(ControllerFile.from_result(result, system.name), path))

        frame = comparison_frame(system, gains[SynthesisMode.DD_ONLY], gains[SynthesisMode.H2_SDP],
                                 args.seed, settings.sim_dt)
        outputs.append(write_csv(frame, args.out / f"{system.name}_comparison.csv"))
        if args.plot:
            outputs.append(plot_series(frame["t"], {"dd-only": frame["g_dd"], "h2-sdp": frame["g_h2"]},
                                       args.out / f"{system.name}_impulse.svg", "|g(t)|", log=True))
            outputs.append(plot_series(frame["t"], {"dd-only": frame["e_cum_dd"], "h2-sdp": frame["e_cum_h2"]},
                                       args.out / f"{system.name}_e_cum.svg", "e_cum(t)", log=True))

    finish_manifest(manifest, args.out, outputs)
    return 0
