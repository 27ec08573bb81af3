"""Consensus, reconstruction, and dual-stability diagnostics."""

import csv
import itertools

import numpy as np

from .grid import GridMap
from .scene import Scene

LOG_NORM_FLOOR = 1e-12


def consensus_disagreement(param_list):
    """Mean and max pairwise L2 distance between agents' parameter vectors."""
    if len(param_list) < 2:
        raise ValueError("need at least 2 agents to measure disagreement")
    dists = [float(np.linalg.norm(a - b)) for a, b in itertools.combinations(param_list, 2)]
    return float(np.mean(dists)), float(np.max(dists))


def eval_lattice(resolution: int) -> np.ndarray:
    """Uniform (resolution^2, 2) evaluation lattice over [0,1]^2, endpoints included."""
    if resolution < 2:
        raise ValueError("eval resolution must be >= 2")
    ticks = np.linspace(0.0, 1.0, resolution)
    gx, gy = np.meshgrid(ticks, ticks, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def field_errors(gmap: GridMap, scene: Scene, resolution: int) -> np.ndarray:
    pts = eval_lattice(resolution)
    return gmap.query(pts) - scene.sdf(pts)


def field_rmse(gmap: GridMap, scene: Scene, resolution: int) -> float:
    """RMSE of the map against the scene over a uniform lattice."""
    err = field_errors(gmap, scene, resolution)
    return float(np.sqrt(np.mean(err * err)))


def completion_ratio(gmap: GridMap, scene: Scene, tolerance: float, resolution: int) -> float:
    """Percentage of lattice points reconstructed within the tolerance."""
    if tolerance <= 0:
        raise ValueError("completion tolerance must be > 0")
    err = field_errors(gmap, scene, resolution)
    return float(100.0 * np.mean(np.abs(err) < tolerance))


def log_norm_slope(series, tail_fraction: float = 0.5) -> float:
    """Least-squares slope of log(norm + floor) over the series tail.

    The tail is the last `tail_fraction` of the samples. Used to classify a
    dual-norm trajectory: a clearly positive slope means the accumulator is
    still growing at the end of the run.
    """
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        return 0.0
    start = int(series.size * (1.0 - tail_fraction))
    tail = series[start:]
    if tail.size < 2:
        tail = series[-2:]
    y = np.log(tail + LOG_NORM_FLOOR)
    x = np.arange(tail.size, dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def is_divergent(series, threshold: float = 1e-3, tail_fraction: float = 0.5) -> bool:
    return log_norm_slope(series, tail_fraction) > threshold


class RoundLog:
    """Per-round records of the loss decomposition and field metrics.

    Agent rows carry the three-way loss split (reconstruction, dual,
    quadratic consensus) plus total, field RMSE, and completion ratio; edge
    rows carry per-accumulator dual norms and the link's activity flag. Rows
    are appended in (round, agent) / (round, edge) order regardless of
    execution order.
    """

    AGENT_FIELDS = ("round", "agent", "recon_loss", "dual_loss", "l2_loss",
                    "total_loss", "rmse", "completion")
    EDGE_FIELDS = ("round", "edge", "dual_norm", "active")

    def __init__(self):
        self.agent_rows = []
        self.edge_rows = []
        self.rounds_logged = 0

    def append_agent(self, round_index, agent_id, recon, dual, quad, rmse, completion):
        self.agent_rows.append({
            "round": round_index, "agent": agent_id,
            "recon_loss": recon, "dual_loss": dual, "l2_loss": quad,
            "total_loss": recon + dual + quad,
            "rmse": rmse, "completion": completion,
        })

    def append_edge(self, round_index, edge_label, dual_norm, active):
        self.edge_rows.append({
            "round": round_index, "edge": edge_label,
            "dual_norm": dual_norm, "active": int(active),
        })

    def close_round(self):
        self.rounds_logged += 1

    def dual_norm_history(self):
        """Per-edge-label time series of dual norms, in round order."""
        series = {}
        for row in self.edge_rows:
            series.setdefault(row["edge"], []).append(row["dual_norm"])
        return {label: np.asarray(vals) for label, vals in series.items()}

    def agent_series(self, field_name: str, agent_id: int) -> np.ndarray:
        return np.asarray([r[field_name] for r in self.agent_rows if r["agent"] == agent_id])

    def write_rounds_csv(self, path):
        _write_csv(path, self.AGENT_FIELDS, self.agent_rows)

    def write_edges_csv(self, path):
        _write_csv(path, self.EDGE_FIELDS, self.edge_rows)


def format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, fields, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([format_cell(row[f]) for f in fields])
