"""mc: Monte Carlo comparison of synthesis modes over randomized power grids."""

import logging
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.commands import run_parameters
from app.control.ddpf import SynthesisResult
from app.control.errors import SynthesisError
from app.control.executor import ExecutorConfig, SynthesisExecutor, SynthesisMode
from app.models import PowerGridParams, build_power_grid, randomize_grid
from app.reports import METRIC_COLUMNS, aggregate_metrics, best_per_column, finish_manifest, start_manifest, write_csv

logger = logging.getLogger(__name__)

DEFAULT_MODES = ["h2-sdp", "dd-h2", "dd-alpha", "dd-gain"]


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def result_status(result: SynthesisResult) -> str:
    """"ok" for a converged or direct solve, otherwise why the DDPF run stopped."""
    if result.converged:
        return "ok"
    return result.stop_reason.value


def run_trial(trial: int, seed: int, modes: List[str], config: ExecutorConfig) -> List[dict]:
    """Synthesize every mode on one randomized grid."""
    derived = trial_seed(seed, trial)
    system = build_power_grid(randomize_grid(PowerGridParams(), derived))
    executor = SynthesisExecutor(config)
    rows = []
    for mode in modes:
        row = {"mode": mode, "trial": trial, "status": "ok", "converged": False}
        try:
            result = executor.execute(system, SynthesisMode(mode), seed=derived)
        except SynthesisError as exc:
            logger.warning("trial %d, %s: %s", trial, mode, exc)
            row.update({metric: np.nan for metric in METRIC_COLUMNS})
            row["status"] = type(exc).__name__
        else:
            m = result.metrics
            row.update({"f_alpha": m.f_alpha, "f_gain": m.f_gain, "f_h2": m.f_h2, "f_dd": m.f_dd,
                        "converged": result.converged, "status": result_status(result)})
        rows.append(row)
    return rows


def register(subparsers) -> None:
    parser = subparsers.add_parser("mc", help="Monte Carlo study over randomized power grids")
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--modes", nargs="+", choices=[m.value for m in SynthesisMode], default=DEFAULT_MODES)
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.set_defaults(handler=run)


def run(args, settings) -> int:
    if args.trials < 1:
        raise ValueError("--trials must be at least 1")
    args.out.mkdir(parents=True, exist_ok=True)
    manifest = start_manifest("mc", run_parameters(args), seed=args.seed)
    config = settings.executor_config()

    batches = Parallel(n_jobs=settings.workers)(
        delayed(run_trial)(trial, args.seed, args.modes, config) for trial in range(args.trials)
    )
    trials = pd.DataFrame([row for batch in batches for row in batch],
                          columns=["mode", "trial", "status", "converged"] + METRIC_COLUMNS)
    trials = trials.sort_values(["trial", "mode"], key=lambda col: col.map(args.modes.index)
                                if col.name == "mode" else col).reset_index(drop=True)
    aggregate = aggregate_metrics(trials, args.modes)

    outputs = [write_csv(trials, args.out / "trials.csv"), write_csv(aggregate, args.out / "aggregate.csv")]
    incomplete = aggregate[aggregate["ok"] < aggregate["trials"]]
    for _, row in incomplete.iterrows():
        logger.warning("%s: %d of %d trials ok", row["mode"], row["ok"], row["trials"])
    if aggregate[[f"{m}_mean" for m in METRIC_COLUMNS]].notna().all().all():
        logger.info("best mean per column: %s", best_per_column(aggregate))
    finish_manifest(manifest, args.out, outputs)
    return 0
