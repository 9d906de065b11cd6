"""
==============================================================================
DDSYNTH - REPORTS AND ARTIFACTS
==============================================================================

- Metrics tables (one row per controller) and Monte Carlo aggregates
- CSV writers with stable float formatting
- Static SVG line plots (matplotlib, Agg backend)
- Run manifests with SHA-256 digests of inputs and outputs

Author: DDSynth Team
==============================================================================
"""

import hashlib
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from app import __version__  # noqa: E402
from app.control.ddpf import Iterate, MetricsRow  # noqa: E402
from app.schemas import RunManifest, manifest_path, write_model  # noqa: E402

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["f_alpha", "f_gain", "f_h2", "f_dd"]
TRACE_COLUMNS = ["iter", "objective", "penalty", "dd_residual", "lyap_margin", "alpha"]
FLOAT_FORMAT = "%.10e"

plt.rcParams.update({
    "svg.hashsalt": "ddsynth",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "figure.figsize": (6.4, 4.0),
})


# =============================================================================
# TABLES
# =============================================================================

def metrics_frame(rows: Iterable[Tuple[str, MetricsRow]]) -> pd.DataFrame:
    """One row per controller: controller_id, f_alpha, f_gain, f_h2, f_dd, hurwitz."""
    records = [
        {"controller_id": cid, "f_alpha": m.f_alpha, "f_gain": m.f_gain,
         "f_h2": m.f_h2, "f_dd": m.f_dd, "hurwitz": m.hurwitz}
        for cid, m in rows
    ]
    return pd.DataFrame(records, columns=["controller_id"] + METRIC_COLUMNS + ["hurwitz"])


def aggregate_metrics(trials: pd.DataFrame, modes: Sequence[str]) -> pd.DataFrame:
    """
    Mean and standard deviation of every metric per mode, rows in ``modes`` order.

    ``trials`` needs the columns mode, trial and the metric columns. Means skip
    missing metrics, so ``trials`` (rows), ``ok`` (status "ok") and
    ``converged`` tell how many trials each mean covers.
    """
    ordered = trials.sort_values(["mode", "trial"])
    grouped = ordered.groupby("mode", sort=False)[METRIC_COLUMNS].agg(["mean", "std"])
    grouped.columns = [f"{metric}_{stat}" for metric, stat in grouped.columns]
    grouped = grouped.reindex([m for m in modes if m in grouped.index])
    by_mode = ordered.groupby("mode")
    grouped["trials"] = by_mode.size().reindex(grouped.index)
    if "status" in ordered:
        grouped["ok"] = by_mode["status"].agg(lambda s: int((s == "ok").sum())).reindex(grouped.index)
    if "converged" in ordered:
        grouped["converged"] = by_mode["converged"].agg(lambda s: int(s.astype(bool).sum())).reindex(grouped.index)
    return grouped.reset_index()


def trace_frame(trace: Sequence[Iterate]) -> pd.DataFrame:
    """DDPF history: iter, objective, penalty, dd_residual, lyap_margin, alpha."""
    records = [
        {"iter": i, "objective": it.objective_value, "penalty": it.penalty,
         "dd_residual": it.dd_residual, "lyap_margin": it.lyap_margin, "alpha": it.alpha}
        for i, it in enumerate(trace)
    ]
    return pd.DataFrame(records, columns=TRACE_COLUMNS)


def best_per_column(aggregate: pd.DataFrame) -> Dict[str, str]:
    """Mode with the lowest mean in each metric column."""
    return {metric: aggregate.loc[aggregate[f"{metric}_mean"].idxmin(), "mode"] for metric in METRIC_COLUMNS}


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


# =============================================================================
# FIGURES
# =============================================================================

def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_sweep(frame: pd.DataFrame, path: Path) -> Path:
    """Mean e_cum(T) over trials against l, one line per controller, log scale."""
    fig, ax = plt.subplots()
    means = frame.groupby(["controller_id", "l"], sort=False)["e_cum_T"].mean().reset_index()
    for cid, group in means.groupby("controller_id", sort=False):
        ax.semilogy(group["l"], group["e_cum_T"].clip(lower=1e-300), marker="o", label=cid)
    ax.set_xlabel("l  (disturbance variance 2^l)")
    ax.set_ylabel("e_cum(T)")
    ax.legend()
    return _save(fig, path)


def plot_series(t, series: Dict[str, Any], path: Path, ylabel: str, log: bool = False) -> Path:
    """Several curves over a shared time axis."""
    fig, ax = plt.subplots()
    for label, values in series.items():
        if log:
            ax.semilogy(t, pd.Series(values).abs().clip(lower=1e-300), label=label)
        else:
            ax.plot(t, values, label=label)
    ax.set_xlabel("t [s]")
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)


def plot_trace(frame: pd.DataFrame, path: Path) -> Path:
    """States and DD error of a simulation trace."""
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 6.0))
    for column in [c for c in frame.columns if c.startswith("x_")]:
        top.plot(frame["t"], frame[column], label=column)
    top.set_ylabel("state")
    top.legend(ncol=3)
    bottom.plot(frame["t"], frame["e_norm"], label="|e(t)|")
    bottom.plot(frame["t"], frame["e_cum"], label="e_cum(t)")
    bottom.set_xlabel("t [s]")
    bottom.legend()
    return _save(fig, path)


# =============================================================================
# MANIFESTS
# =============================================================================

def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def start_manifest(command: str, parameters: Dict[str, Any], seed: Optional[int] = None,
                   inputs: Sequence[Path] = ()) -> RunManifest:
    """Manifest with input digests taken before any output is written."""
    return RunManifest(
        command=command,
        parameters={key: str(value) if isinstance(value, Path) else value for key, value in parameters.items()},
        seed=seed,
        tool_version=__version__,
        started_at=datetime.now(timezone.utc),
        inputs={str(p): sha256_file(p) for p in inputs},
    )


def finish_manifest(manifest: RunManifest, anchor: Path, outputs: List[Path]) -> Path:
    """Record output digests and write the manifest as the sidecar of ``anchor``."""
    manifest.outputs = {str(p): sha256_file(p) for p in outputs}
    path = write_model(manifest.finish(), manifest_path(anchor))
    logger.info("wrote manifest %s", path)
    return path
