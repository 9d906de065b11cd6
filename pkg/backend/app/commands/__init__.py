"""
Command-line subcommands. Each module exposes ``register(subparsers)``, which
adds its parser and sets ``handler`` to a ``run(args, settings) -> int``.
"""

import argparse
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from app.models import LtiSystem
from app.schemas import ControllerFile, SystemFile, read_model


def load_system(path: Path) -> LtiSystem:
    return read_model(SystemFile, path).to_system()


def load_controller(path: Path) -> ControllerFile:
    return read_model(ControllerFile, path)


def run_parameters(args: argparse.Namespace) -> Dict[str, Any]:
    """Serializable view of the parsed arguments for the run manifest."""
    params = {}
    for key, value in vars(args).items():
        if callable(value):
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, (list, tuple)):
            value = [str(v) if isinstance(v, Path) else v for v in value]
        params[key] = value
    return params


def parse_levels(text: str) -> List[int]:
    """'7:20' -> [7, ..., 20] (inclusive); '7,9,11' -> [7, 9, 11]."""
    try:
        if ":" in text:
            low, high = (int(part) for part in text.split(":"))
            if high < low:
                raise ValueError
            return list(range(low, high + 1))
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid level range {text!r} (use LOW:HIGH or a comma list)")


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(part) for part in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid vector {text!r} (use comma-separated numbers)")
