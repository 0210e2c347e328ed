"""On-disk record format and plot-ready figure exports.

Every file is plain text. CSVs carry a single header row and floats written
with ``repr`` (shortest round-trip form); the ``record.json`` manifest in each
record directory carries the ``schema_version`` and lists the files.

Record directory (Kuramoto model)::

    record.json     manifest: schema_version, model, seed, n, analysis toggles, files
    trajectory.csv  t, r, psi, L, S, dSdt
    nodes.csv       t, theta_0..theta_{n-1}, domega_0..domega_{n-1}
    network.json    initial network
    regime.json     regime report (analysis.regime)
    qoppa.json      frequency-shift/action fit (analysis.qoppa)
    embedding.csv   t, x, y, color (analysis.trajectory_embed)
    probe.csv       t, theta_probe, theta_dot_probe (probe config)

Figure exports::

    fig6         t, dSdt
    fig7         t, domega_0..domega_{n-1}
    fig8         x, y, color          (color = dS/dt at that sample)
    phase-circle node, cos, sin       (one snapshot, default the last sample)
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .action import TrajectoryRecord, config_trajectory
from .graph import load_network

RECORD_SCHEMA_VERSION = 1
FIGURES = ("fig6", "fig7", "fig8", "phase-circle")

# figure -> analysis toggle that must have been on when the record was written
FIGURE_TOGGLES = {"fig8": "trajectory_embed"}


class MissingToggleError(ValueError):
    pass


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path, header: Sequence[str], columns: Iterable) -> None:
    cols = [np.asarray(c) for c in columns]
    rows = zip(*(c.tolist() for c in cols))
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else
                              (str(v) if isinstance(v, int) else _fmt(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple:
    """Return ``(header, float matrix)``."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader if row]
    arr = np.asarray(data, dtype=float).reshape(len(data), len(header))
    return header, arr


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_record(record: TrajectoryRecord, directory) -> dict:
    """Write ``trajectory.csv`` and ``nodes.csv``; returns ``{role: filename}``."""
    d = Path(directory)
    write_csv(d / "trajectory.csv", ["t", "r", "psi", "L", "S", "dSdt"],
              [record.times, record.r_series, record.psi_series, record.lagrangian_series,
               record.action_series, record.action_derivative_series])
    n = record.n
    header = ["t"] + [f"theta_{i}" for i in range(n)] + [f"domega_{i}" for i in range(n)]
    cols = [record.times] + list(record.thetas.T) + list(record.freq_shift_series.T)
    write_csv(d / "nodes.csv", header, cols)
    return {"trajectory": "trajectory.csv", "nodes": "nodes.csv"}


def read_record(directory) -> TrajectoryRecord:
    """Load a record directory written by the runner.

    ``theta_dots`` are rebuilt as ``domega + omega`` of the stored initial
    network, so they are exact only for runs without frequency-shift
    perturbations.
    """
    d = Path(directory)
    hdr, traj = read_csv(d / "trajectory.csv")
    if hdr != ["t", "r", "psi", "L", "S", "dSdt"]:
        raise ValueError(f"{d / 'trajectory.csv'}: unexpected header {hdr}")
    nhdr, nodes = read_csv(d / "nodes.csv")
    n = (len(nhdr) - 1) // 2
    thetas = nodes[:, 1:1 + n]
    dom = nodes[:, 1 + n:]
    omega = np.zeros(n)
    if (d / "network.json").exists():
        omega = load_network(d / "network.json").omega
    return TrajectoryRecord(traj[:, 0], thetas, dom + omega, traj[:, 1], traj[:, 2], traj[:, 3],
                            traj[:, 4], traj[:, 5], dom)


def read_manifest(directory) -> dict:
    path = Path(directory) / "record.json"
    if not path.exists():
        raise FileNotFoundError(f"{directory} is not a record directory (no record.json)")
    return json.loads(path.read_text())


def export_figure_data(record: TrajectoryRecord, which: str, path,
                       toggles: Optional[dict] = None, snapshot: int = -1) -> Path:
    """Write plot-ready CSV for one figure.

    ``toggles`` are the analysis switches the record was produced with; a
    figure whose switch was off is refused with the name of the switch.
    """
    if which not in FIGURES:
        raise ValueError(f"unknown figure {which!r}; expected one of {', '.join(FIGURES)}")
    need = FIGURE_TOGGLES.get(which)
    if need and toggles is not None and not toggles.get(need, False):
        raise MissingToggleError(
            f"{which} needs the trajectory embedding; enable 'analysis.{need}: true' "
            f"in the run config and rerun")
    path = Path(path)
    if which == "fig6":
        write_csv(path, ["t", "dSdt"], [record.times, record.action_derivative_series])
    elif which == "fig7":
        header = ["t"] + [f"domega_{i}" for i in range(record.n)]
        write_csv(path, header, [record.times] + list(record.freq_shift_series.T))
    elif which == "fig8":
        pts = config_trajectory(record.thetas, record.action_derivative_series)
        write_csv(path, ["x", "y", "color"], list(pts.T))
    else:
        theta = record.thetas[snapshot]
        write_csv(path, ["node", "cos", "sin"],
                  [np.arange(theta.shape[0]), np.cos(theta), np.sin(theta)])
    return path


def export_phase_circle(phases, path) -> Path:
    """Phase-circle snapshot from angles in radians."""
    theta = np.asarray(phases, dtype=float)
    write_csv(path, ["node", "cos", "sin"],
              [np.arange(theta.shape[0]), np.cos(theta), np.sin(theta)])
    return Path(path)


def export_from_directory(directory, which: str, path) -> Path:
    """Export a figure from a record directory written by the runner."""
    manifest = read_manifest(directory)
    toggles = manifest.get("analysis", {})
    if manifest.get("model") == "pulse":
        if which != "phase-circle":
            raise MissingToggleError(
                f"{which} needs a Kuramoto trajectory; this record is a pulse run "
                f"(set 'model: kuramoto'); only phase-circle is available")
        _, ph = read_csv(Path(directory) / "phases.csv")
        return export_phase_circle(2.0 * np.pi * ph[:, 1], path)
    need = FIGURE_TOGGLES.get(which)
    if need and not toggles.get(need, False):
        raise MissingToggleError(
            f"{which} needs the trajectory embedding; enable 'analysis.{need}: true' "
            f"in the run config and rerun")
    return export_figure_data(read_record(directory), which, path, toggles)
