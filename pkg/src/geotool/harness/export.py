"""CSV and JSON export of trajectories."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from ..dynamics import Trajectory

COLUMNS = ("t", "theta1", "theta2", "theta1_wrapped", "theta2_wrapped", "v1", "v2",
           "tool_x", "tool_y", "u1", "u2", "lambda", "psi", "kinetic", "potential",
           "total_energy", "power", "sing_margin")
_OPTIONAL = ("lambda", "psi")


def trajectory_columns(traj: Trajectory) -> dict:
    qw = traj.q_wrapped
    cols = {
        "t": traj.t, "theta1": traj.q[:, 0], "theta2": traj.q[:, 1],
        "theta1_wrapped": qw[:, 0], "theta2_wrapped": qw[:, 1],
        "v1": traj.v[:, 0], "v2": traj.v[:, 1],
        "tool_x": traj.tool[:, 0], "tool_y": traj.tool[:, 1],
        "u1": traj.u[:, 0], "u2": traj.u[:, 1],
        "lambda": traj.lam, "psi": traj.psi,
        "kinetic": traj.kinetic, "potential": traj.potential, "total_energy": traj.total,
        "power": traj.power, "sing_margin": traj.sing_margin,
    }
    return {name: cols[name] for name in COLUMNS}


def _records(traj: Trajectory):
    cols = trajectory_columns(traj)
    for i in range(len(traj)):
        row = {}
        for name in COLUMNS:
            value = float(cols[name][i])
            row[name] = None if (name in _OPTIONAL and math.isnan(value)) else value
        yield row


def _clean(value):
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for row in _records(traj):
            writer.writerow(["" if row[c] is None else repr(row[c]) for c in COLUMNS])


def write_json(traj: Trajectory, metrics, path, name: str = "") -> None:
    doc = {
        "scenario": name,
        "columns": list(COLUMNS),
        "samples": list(_records(traj)),
        "metrics": _clean(metrics.as_dict()) if metrics is not None else None,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def export(traj: Trajectory, metrics, fmt: str, path, name: str = "") -> None:
    """Write ``traj`` (and ``metrics`` for JSON) to ``path`` as ``csv`` or ``json``."""
    if fmt == "csv":
        write_csv(traj, path)
    elif fmt == "json":
        write_json(traj, metrics, path, name)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_csv(path) -> dict:
    """Columns of an exported CSV as float arrays (NaN for empty fields)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) if r[i] != "" else np.nan for r in body])
            for i, name in enumerate(header)}


def read_json(path) -> dict:
    """Columns of an exported JSON document as float arrays, plus ``metrics``."""
    with open(path) as fh:
        doc = json.load(fh)
    out = {name: np.array([np.nan if s[name] is None else s[name] for s in doc["samples"]], float)
           for name in doc["columns"]}
    out["metrics"] = doc["metrics"]
    return out
