"""Round-based experiment driver, centralized pooled-data oracle, and output emission.

A run executes, per round: observation growth, link sampling, snapshot
exchange, dual updates, B primal steps, uncertainty counting (the update
order of the round loop), logging everything. Every artifact is a pure
function of the resolved config; reruns with the same config and seeds
produce byte-identical CSVs.
"""

import csv
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, build_coverages, build_scene, derive_seeds, resolved_dict
from .datasets import AgentDataset, sample_observations
from .grid import GridMap, local_objective
from .metrics import (RoundLog, consensus_disagreement, eval_lattice, format_cell,
                      log_norm_slope)
from .network import CommGraph, LinkSchedule, exchange
from .optimizer import AgentState, advance_agent

logger = logging.getLogger(__name__)

OUT_ROOT_ENV = "GRIDFUSE_OUT_ROOT"

DIVERGENCE_SLOPE_THRESHOLD = 1e-3  # per-round log-norm tail slope


class FieldEvaluator:
    """Cached lattice evaluation of map error against the scene."""

    def __init__(self, levels, scene, resolution, tolerance):
        self.pts = eval_lattice(resolution)
        gm = GridMap(levels)
        self.idx, self.wts = gm.support(self.pts)
        self.truth = scene.sdf(self.pts)
        self.tolerance = tolerance

    def metrics(self, params):
        pred = np.einsum("ij,ij->i", params[self.idx], self.wts)
        err = pred - self.truth
        rmse = float(np.sqrt(np.mean(err * err)))
        completion = float(100.0 * np.mean(np.abs(err) < self.tolerance))
        return rmse, completion


@dataclass
class RunResult:
    config: ExperimentConfig
    scene: object
    states: dict
    round_log: RoundLog
    disagreement: np.ndarray       # (rounds, 2): mean, max
    summary: dict
    out_dir: Path | None
    gradient_logs: dict            # agent id -> list of local-term gradients (opt-in)
    schedule_rows: list


def _resolve_out_dir(cfg: ExperimentConfig, out_dir) -> Path | None:
    target = out_dir if out_dir is not None else cfg.out_dir
    if target is None:
        return None
    target = Path(target)
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not target.is_absolute():
        target = Path(root) / target
    return target


def _edge_label(receiver, sender) -> str:
    return f"{receiver}-{sender}"


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunResult:
    """Execute one experiment; write CSV/JSON artifacts when a directory is set."""
    scene = build_scene(cfg)
    coverages = build_coverages(cfg)
    seeds = derive_seeds(cfg)
    opt_cfg = cfg.optimizer_config()
    graph = CommGraph.complete(cfg.agents, mode=cfg.comm_mode)
    schedule = LinkSchedule(graph, cfg.comm_rate, seeds.edge)
    evaluator = FieldEvaluator(cfg.grid_levels, scene, cfg.eval_resolution,
                               cfg.completion_tolerance)

    data_rngs = [np.random.default_rng(s) for s in seeds.agent_data]
    batch_rngs = [np.random.default_rng(s) for s in seeds.agent_batch]
    template = GridMap(cfg.grid_levels)
    states = {}
    work_maps = {}
    for i in range(cfg.agents):
        dataset = AgentDataset(coverages[i], cfg.obs_per_round, cfg.noise_sigma)
        states[i] = AgentState(i, template.n_params, graph.potential_neighbors(i),
                               dataset=dataset)
        work_maps[i] = GridMap(cfg.grid_levels)

    def make_local_eval(i):
        dataset = states[i].dataset
        gmap = work_maps[i]

        def evaluate(theta, rng):
            pts, vals = dataset.sample_batch(cfg.batch_size, rng)
            gmap.params = theta
            return local_objective(gmap, pts, vals, cfg.smoothness_weight)

        return evaluate

    local_evals = {i: make_local_eval(i) for i in range(cfg.agents)}
    gradient_logs = {i: [] for i in range(cfg.agents)} if cfg.log_gradients else {}

    log = RoundLog()
    schedule_rows = []
    disagreement = np.zeros((cfg.rounds, 2))
    warnings = []
    aborted = None
    total_messages = 0
    total_payload = 0
    rounds_executed = 0

    for t in range(cfg.rounds):
        for i in range(cfg.agents):
            sample_observations(states[i].dataset, scene, data_rngs[i])
        neighbor_sets, active_map = schedule.sample()
        for key in sorted(active_map):
            schedule_rows.append((t, _edge_label(*key), int(active_map[key])))
        inbox = exchange(states, neighbor_sets, t)
        for i in range(cfg.agents):
            total_messages += len(inbox[i])
            total_payload += sum(m.params.size + m.counts.size for m in inbox[i])

        for i in range(cfg.agents):
            state = states[i]
            local_eval = local_evals[i] if state.dataset.size > 0 else None
            if local_eval is None:
                warnings.append(f"round {t}: agent {i} has no data yet, primal step skipped")
            ev = advance_agent(state, inbox[i], opt_cfg, local_eval, batch_rngs[i],
                               grad_log=gradient_logs.get(i))
            finite = np.isfinite(state.params).all() and np.isfinite(state.aggregate_dual).all() \
                and all(np.isfinite(p).all() for p in state.edge_duals.values())
            if not finite:
                aborted = {"round": t, "agent": i}
                logger.warning("non-finite state at round %d, agent %d; aborting run", t, i)
            rmse, completion = evaluator.metrics(state.params)
            if ev is None:
                log.append_agent(t, i, 0.0, 0.0, 0.0, rmse, completion)
            else:
                log.append_agent(t, i, ev.recon, ev.dual, ev.quad, rmse, completion)

        for i in range(cfg.agents):
            state = states[i]
            if opt_cfg.variant == "udon":
                for j in sorted(state.edge_duals):
                    log.append_edge(t, _edge_label(i, j),
                                    float(np.linalg.norm(state.edge_duals[j])),
                                    j in neighbor_sets[i])
            elif opt_cfg.variant == "baseline_cadmm":
                log.append_edge(t, f"{i}:agg",
                                float(np.linalg.norm(state.aggregate_dual)),
                                len(neighbor_sets[i]) > 0)
        if cfg.agents >= 2:
            disagreement[t] = consensus_disagreement([states[i].params
                                                      for i in range(cfg.agents)])
        log.close_round()
        rounds_executed = t + 1
        if aborted:
            break

    disagreement = disagreement[:rounds_executed]
    summary = _build_summary(cfg, states, log, disagreement, warnings, aborted,
                             rounds_executed, total_messages, total_payload, evaluator)
    target = _resolve_out_dir(cfg, out_dir)
    if target is not None:
        _write_outputs(target, cfg, states, log, schedule_rows, summary)
    return RunResult(config=cfg, scene=scene, states=states, round_log=log,
                     disagreement=disagreement, summary=summary, out_dir=target,
                     gradient_logs=gradient_logs, schedule_rows=schedule_rows)


def _build_summary(cfg, states, log, disagreement, warnings, aborted, rounds_executed,
                   total_messages, total_payload, evaluator) -> dict:
    per_agent = []
    for i in range(cfg.agents):
        rmse, completion = evaluator.metrics(states[i].params)
        per_agent.append({"agent": i, "rmse": rmse, "completion": completion,
                          "dataset_size": states[i].dataset.size})
    divergence = {}
    for label, series in log.dual_norm_history().items():
        slope = log_norm_slope(series)
        divergence[label] = {"tail_slope": slope,
                             "divergent": bool(slope > DIVERGENCE_SLOPE_THRESHOLD)}
    final_disagreement = ([float(disagreement[-1, 0]), float(disagreement[-1, 1])]
                          if len(disagreement) else [0.0, 0.0])
    return {
        "config": resolved_dict(cfg),
        "rounds_executed": rounds_executed,
        "final": {
            "per_agent": per_agent,
            "mean_completion": float(np.mean([a["completion"] for a in per_agent])),
            "mean_rmse": float(np.mean([a["rmse"] for a in per_agent])),
            "disagreement_mean": final_disagreement[0],
            "disagreement_max": final_disagreement[1],
        },
        "divergence": divergence,
        "comm": {"messages": total_messages, "payload_values": total_payload},
        "warnings": warnings,
        "aborted": aborted,
    }


def _write_outputs(target: Path, cfg, states, log, schedule_rows, summary):
    target.mkdir(parents=True, exist_ok=True)
    log.write_rounds_csv(target / "rounds.csv")
    log.write_edges_csv(target / "edges.csv")
    with open(target / "schedule.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("round", "edge", "active"))
        writer.writerows(schedule_rows)
    write_params_csv(target / "params_final.csv", cfg.grid_levels,
                     {i: (states[i].params, states[i].counts) for i in sorted(states)})
    with open(target / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_params_csv(path, levels, params_by_agent):
    """Flat parameter/count dump; layout documented in docs/formats.md."""
    template = GridMap(levels)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("agent", "level", "resolution", "iy", "ix", "value", "count"))
        for agent, (params, counts) in params_by_agent.items():
            for li, r in enumerate(template.levels):
                off = template.offsets[li]
                for iy in range(r + 1):
                    for ix in range(r + 1):
                        k = off + iy * (r + 1) + ix
                        writer.writerow((agent, li, r, iy, ix,
                                         format_cell(float(params[k])), int(counts[k])))


@dataclass
class OracleResult:
    gmap: GridMap
    rmse: float
    completion: float
    pooled_size: int
    steps: int


def centralized_oracle(cfg: ExperimentConfig, out_dir=None) -> OracleResult:
    """Train one map on the union of all agents' data; upper-bound reference.

    Replays every agent's observation stream (same data seeds as
    run_experiment), pools the observations, and runs steps_per_round *
    rounds gradient steps with the run's learning rate.
    """
    scene = build_scene(cfg)
    coverages = build_coverages(cfg)
    seeds = derive_seeds(cfg)
    data_rngs = [np.random.default_rng(s) for s in seeds.agent_data]
    pooled = AgentDataset(coverages, 0, cfg.noise_sigma)
    agent_sets = [AgentDataset(coverages[i], cfg.obs_per_round, cfg.noise_sigma)
                  for i in range(cfg.agents)]
    for _ in range(cfg.rounds):
        for i in range(cfg.agents):
            pts, vals = sample_observations(agent_sets[i], scene, data_rngs[i])
            if len(vals):
                pooled.append(pts, vals)

    gmap = GridMap(cfg.grid_levels)
    steps = cfg.steps_per_round * cfg.rounds
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0x0AC1E)))
    theta = gmap.params
    if pooled.size:
        for _ in range(steps):
            pts, vals = pooled.sample_batch(cfg.batch_size, rng)
            gmap.params = theta
            _, grad = local_objective(gmap, pts, vals, cfg.smoothness_weight)
            theta = theta - cfg.learning_rate * grad
    gmap.params = theta
    evaluator = FieldEvaluator(cfg.grid_levels, scene, cfg.eval_resolution,
                               cfg.completion_tolerance)
    rmse, completion = evaluator.metrics(theta)
    result = OracleResult(gmap=gmap, rmse=rmse, completion=completion,
                          pooled_size=pooled.size, steps=steps)
    target = _resolve_out_dir(cfg, out_dir)
    if target is not None:
        target.mkdir(parents=True, exist_ok=True)
        write_params_csv(target / "oracle_params.csv", cfg.grid_levels,
                         {0: (gmap.params, np.zeros(gmap.n_params, dtype=np.int64))})
        with open(target / "oracle_summary.json", "w") as fh:
            json.dump({"config": resolved_dict(cfg), "rmse": rmse,
                       "completion": completion, "pooled_size": pooled.size,
                       "steps": steps}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result
