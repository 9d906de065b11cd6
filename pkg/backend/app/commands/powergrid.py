"""powergrid: write the nominal or a randomized four-bus power network."""

import logging
from pathlib import Path

from app.commands import run_parameters
from app.models import PowerGridParams, build_power_grid, randomize_grid
from app.reports import finish_manifest, start_manifest
from app.schemas import SystemFile, manifest_path, write_model

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("powergrid", help="write a four-bus power network system file")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--nominal", action="store_true", help="nominal parameters")
    source.add_argument("--seed", type=int, help="randomize inertia and damping with this seed")
    parser.add_argument("--out", type=Path, required=True)
    parser.set_defaults(handler=run)


def run(args, settings) -> int:
    manifest = start_manifest("powergrid", run_parameters(args), seed=args.seed)
    params = PowerGridParams()
    if args.seed is not None:
        params = randomize_grid(params, args.seed)
    system = build_power_grid(params)

    record = SystemFile.from_system(system, params)
    record.manifest = manifest_path(args.out).name
    write_model(record, args.out)
    finish_manifest(manifest, args.out, [args.out])
    logger.info("power grid written to %s", args.out)
    return 0
