"""synth: synthesize one controller in a given mode."""

import logging
from pathlib import Path

from app.commands import load_system, run_parameters
from app.control.errors import NumericalFailure
from app.control.executor import SynthesisExecutor, SynthesisMode
from app.reports import finish_manifest, start_manifest, trace_frame, write_csv
from app.schemas import ControllerFile, manifest_path, write_model

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("synth", help="synthesize a controller")
    parser.add_argument("--system", type=Path, required=True)
    parser.add_argument("--mode", choices=[m.value for m in SynthesisMode], required=True)
    parser.add_argument("--seed", type=int, default=0, help="seed of the DDPF initialization search")
    parser.add_argument("--max-iters", dest="max_iters", type=int, help="DDPF iteration limit")
    parser.add_argument("--gamma", type=float, help="DDPF proximal weight")
    parser.add_argument("--trace", type=Path, help="CSV of the DDPF iterates")
    parser.add_argument("--out", type=Path, required=True)
    parser.set_defaults(handler=run)


def run(args, settings) -> int:
    manifest = start_manifest("synth", run_parameters(args), seed=args.seed, inputs=[args.system])
    system = load_system(args.system)
    executor = SynthesisExecutor(settings.executor_config())
    result = executor.execute(system, SynthesisMode(args.mode), seed=args.seed)
    if result.warning:
        logger.warning("%s: %s", args.mode, result.warning)

    record = ControllerFile.from_result(result, system.name)
    record.manifest = manifest_path(args.out).name
    outputs = [write_model(record, args.out)]
    if args.trace is not None:
        outputs.append(write_csv(trace_frame(result.trace), args.trace))
    finish_manifest(manifest, args.out, outputs)

    if result.stop_reason.is_failure:
        logger.error("%s stopped on %s; wrote the last accepted iterate", args.mode, result.stop_reason.value)
        return NumericalFailure.exit_code
    return 0
