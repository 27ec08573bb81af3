"""Synthetic quadratic consensus problems with closed-form oracles.

Each agent owns f_i(theta) = ||A_i theta - b_i||^2; the pooled optimum
solves (sum A_i^T A_i) theta = sum A_i^T b_i and serves as the consensus
oracle for the round-based variants.
"""

from dataclasses import dataclass

import numpy as np

from .network import CommGraph, LinkSchedule, exchange
from .optimizer import AgentState, OptimizerConfig, advance_agent


@dataclass(frozen=True)
class QuadraticProblem:
    mats: tuple   # per-agent A_i, each (m_i, d)
    rhs: tuple    # per-agent b_i, each (m_i,)

    def __post_init__(self):
        if len(self.mats) != len(self.rhs) or len(self.mats) == 0:
            raise ValueError("need matching non-empty A and b collections")
        d = self.mats[0].shape[1]
        for a, b in zip(self.mats, self.rhs):
            if a.ndim != 2 or a.shape[1] != d or b.shape != (a.shape[0],):
                raise ValueError("inconsistent quadratic problem shapes")

    @property
    def n_agents(self) -> int:
        return len(self.mats)

    @property
    def dim(self) -> int:
        return self.mats[0].shape[1]

    @classmethod
    def random(cls, n_agents: int, dim: int, rng, rows: int | None = None):
        rows = rows or dim
        mats = tuple(rng.standard_normal((rows, dim)) / np.sqrt(rows) for _ in range(n_agents))
        rhs = tuple(rng.standard_normal(rows) for _ in range(n_agents))
        return cls(mats, rhs)

    def local_eval(self, agent_index: int):
        """Exact (loss, gradient) evaluator for one agent's term."""
        a = self.mats[agent_index]
        b = self.rhs[agent_index]

        def evaluate(theta, rng):
            r = a @ theta - b
            return float(r @ r), 2.0 * (a.T @ r)

        return evaluate


def solve_quadratic_closed_form(problem: QuadraticProblem) -> np.ndarray:
    """Pooled least-squares optimum via a direct linear solve."""
    normal = sum(a.T @ a for a in problem.mats)
    rhs = sum(a.T @ b for a, b in zip(problem.mats, problem.rhs))
    return np.linalg.solve(normal, rhs)


@dataclass
class QuadraticRunResult:
    states: list
    rel_distances: np.ndarray   # per round: max_i ||theta_i - theta*|| / ||theta*||
    dual_norms: dict            # label -> per-round series
    theta_star: np.ndarray


def run_quadratic_consensus(problem: QuadraticProblem, cfg: OptimizerConfig,
                            rate: float, rounds: int, seed: int) -> QuadraticRunResult:
    """Round-based consensus on a quadratic problem over a lossy complete graph."""
    n = problem.n_agents
    theta_star = solve_quadratic_closed_form(problem)
    star_norm = float(np.linalg.norm(theta_star))
    graph = CommGraph.complete(n)
    root = np.random.SeedSequence(seed)
    edge_seed = int(root.generate_state(1)[0])
    schedule = LinkSchedule(graph, rate, edge_seed)
    agent_rngs = [np.random.default_rng(ss) for ss in root.spawn(n)]
    states = {
        i: AgentState(i, problem.dim, graph.potential_neighbors(i))
        for i in range(n)
    }
    locals_ = [problem.local_eval(i) for i in range(n)]

    rel = np.empty(rounds)
    dual_norms = {}
    for t in range(rounds):
        neighbor_sets, _ = schedule.sample()
        inbox = exchange(states, neighbor_sets, t)
        for i in range(n):
            advance_agent(states[i], inbox[i], cfg, locals_[i], agent_rngs[i])
        rel[t] = max(
            float(np.linalg.norm(states[i].params - theta_star)) for i in range(n)
        ) / star_norm
        for i in range(n):
            if cfg.variant == "baseline_cadmm":
                dual_norms.setdefault(f"{i}:agg", []).append(
                    float(np.linalg.norm(states[i].aggregate_dual)))
            elif cfg.variant == "udon":
                for j, p in states[i].edge_duals.items():
                    dual_norms.setdefault(f"{i}-{j}", []).append(float(np.linalg.norm(p)))
    return QuadraticRunResult(
        states=[states[i] for i in range(n)],
        rel_distances=rel,
        dual_norms={k: np.asarray(v) for k, v in dual_norms.items()},
        theta_star=theta_star,
    )
