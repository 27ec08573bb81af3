"""Agent update rules for the four consensus variants.

A round for one agent runs in two phases, in order:

  1. dual phase: consensus-violation accumulators are advanced using the
     round-start parameter snapshots exchanged this round;
  2. primal phase: a fixed number of gradient-descent steps on the local
     objective plus the variant's consensus penalties, with the neighbor
     snapshots and trust weights held fixed across the steps.

Variants:
  - baseline_cadmm: one aggregate dual accumulator per agent; its linear
    penalty applies every round regardless of connectivity.
  - udon: one dual accumulator per communication edge, advanced and
    penalized only for currently-active neighbors; consensus targets and
    penalties are trust-weighted.
  - consistency_only: no duals, plain quadratic pull toward active
    neighbors' snapshots (labeled approximation of consistency-loss
    methods).
  - no_comm: pure local training.
"""

from dataclasses import dataclass

import numpy as np

from .uncertainty import compute_weights, record_gradient, touched_mask

VARIANTS = ("baseline_cadmm", "udon", "consistency_only", "no_comm")
COUNT_MODES = ("per_step", "per_round")


@dataclass(frozen=True)
class OptimizerConfig:
    variant: str
    rho: float = 0.05
    steps_per_round: int = 5
    learning_rate: float = 0.01
    beta_lower: float = 0.1
    beta_upper: float = 1.0
    smoothness_weight: float = 0.1
    grad_threshold: float = 0.0
    count_mode: str = "per_step"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if self.rho <= 0:
            raise ValueError("rho must be > 0")
        if self.steps_per_round < 1:
            raise ValueError("steps_per_round must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 < self.beta_lower <= self.beta_upper:
            raise ValueError("need 0 < beta_lower <= beta_upper")
        if self.smoothness_weight < 0:
            raise ValueError("smoothness_weight must be >= 0")
        if self.grad_threshold < 0:
            raise ValueError("grad_threshold must be >= 0")
        if self.count_mode not in COUNT_MODES:
            raise ValueError(f"unknown count_mode {self.count_mode!r}")


@dataclass(frozen=True)
class ReceivedMessage:
    """Immutable snapshot of a neighbor's map and counts at round start."""

    sender: int
    params: np.ndarray
    counts: np.ndarray
    round_index: int

    @staticmethod
    def snapshot(sender, params, counts, round_index):
        p = np.array(params, copy=True)
        c = np.array(counts, copy=True)
        p.flags.writeable = False
        c.flags.writeable = False
        return ReceivedMessage(sender, p, c, round_index)


def message_payload(msg: ReceivedMessage) -> int:
    """Numbers carried by one delivery, for bandwidth accounting."""
    return msg.params.size + msg.counts.size


class AgentState:
    """One agent's optimization state.

    Edge duals exist (zero-initialized) for every potential neighbor; a dual
    for a link that never activates stays exactly zero. The aggregate dual
    is used by the baseline variant only.
    """

    def __init__(self, agent_id: int, n_params: int, neighbor_ids, dataset=None):
        self.agent_id = agent_id
        self.params = np.zeros(n_params)
        self.counts = np.zeros(n_params, dtype=np.int64)
        self.edge_duals = {int(j): np.zeros(n_params) for j in neighbor_ids}
        self.aggregate_dual = np.zeros(n_params)
        self.dataset = dataset

    @property
    def n_params(self) -> int:
        return self.params.size


@dataclass
class ObjectiveEval:
    """One evaluation of a variant's primal objective, decomposed."""

    recon: float
    dual: float
    quad: float
    grad: np.ndarray
    local_grad: np.ndarray

    @property
    def total(self) -> float:
        return self.recon + self.dual + self.quad


def _check_message(state: AgentState, msg: ReceivedMessage):
    if msg.params.shape != state.params.shape:
        raise ValueError(f"message from agent {msg.sender} has {msg.params.size} params, "
                         f"agent {state.agent_id} has {state.params.size}")


def dual_update_aggregate(state: AgentState, received, rho: float):
    """Baseline dual step: p_i += rho * sum_j (theta_i - theta_j).

    Must run during the dual phase, while state.params still holds the
    round-start value. No-op when nothing was received.
    """
    for msg in received:
        _check_message(state, msg)
        state.aggregate_dual += rho * (state.params - msg.params)


def dual_update_edge(state: AgentState, msg: ReceivedMessage, rho: float,
                     weights=None, beta_lower=None, beta_upper=None):
    """Edge dual step for one currently-active neighbor.

    Increments p_(i,j) by 2*rho times the elementwise harmonic mean of the
    trust weights times (theta_i - theta_j); duals of other neighbors are
    untouched. The increment is exactly antisymmetric between the two ends
    of a link, so symmetric activation from zero init keeps
    p_(i,j) == -p_(j,i) bit-exactly.
    """
    _check_message(state, msg)
    if weights is None:
        weights = compute_weights(state.counts, msg.counts, beta_lower, beta_upper)
    w_ij, w_ji = weights
    harmonic = w_ij * w_ji / (w_ij + w_ji)
    state.edge_duals[msg.sender] += (2.0 * rho) * harmonic * (state.params - msg.params)


def make_primal_objective(cfg: OptimizerConfig, local_eval, theta_round: np.ndarray,
                          received, aggregate_dual=None, edge_duals=None,
                          weights_by_sender=None):
    """Build the variant's primal objective as obj(theta, rng) -> ObjectiveEval.

    `local_eval(theta, rng) -> (loss, grad)` supplies the local term (it
    samples its own mini-batch). Neighbor snapshots, duals, and weights are
    captured once; only theta moves during the primal steps. Consensus sums
    range over the received (currently active) neighbors only, except the
    baseline's aggregate dual term, which always applies.
    """
    variant = cfg.variant
    rho = cfg.rho

    if variant == "udon":
        targets = []
        for msg in received:
            w_ij, w_ji = weights_by_sender[msg.sender]
            target = (w_ij * theta_round + w_ji * msg.params) / (w_ij + w_ji)
            targets.append((w_ij, target, edge_duals[msg.sender]))

        def objective(theta, rng):
            recon, grad_local = local_eval(theta, rng)
            grad = grad_local.copy()
            dual_loss = 0.0
            quad_loss = 0.0
            for w_ij, target, p in targets:
                dual_loss += float(theta @ p)
                diff = theta - target
                quad_loss += rho * float(np.sum(w_ij * diff * diff))
                grad += p + (2.0 * rho) * w_ij * diff
            return ObjectiveEval(recon, dual_loss, quad_loss, grad, grad_local)

    elif variant == "baseline_cadmm":
        midpoints = [0.5 * (theta_round + msg.params) for msg in received]
        p_agg = aggregate_dual

        def objective(theta, rng):
            recon, grad_local = local_eval(theta, rng)
            dual_loss = float(theta @ p_agg)
            grad = grad_local + p_agg
            quad_loss = 0.0
            for mid in midpoints:
                diff = theta - mid
                quad_loss += rho * float(diff @ diff)
                grad += (2.0 * rho) * diff
            return ObjectiveEval(recon, dual_loss, quad_loss, grad, grad_local)

    elif variant == "consistency_only":
        anchors = [msg.params for msg in received]

        def objective(theta, rng):
            recon, grad_local = local_eval(theta, rng)
            grad = grad_local.copy()
            quad_loss = 0.0
            for anchor in anchors:
                diff = theta - anchor
                quad_loss += rho * float(diff @ diff)
                grad += (2.0 * rho) * diff
            return ObjectiveEval(recon, 0.0, quad_loss, grad, grad_local)

    elif variant == "no_comm":

        def objective(theta, rng):
            recon, grad_local = local_eval(theta, rng)
            return ObjectiveEval(recon, 0.0, 0.0, grad_local, grad_local)

    else:  # pragma: no cover - guarded by OptimizerConfig
        raise ValueError(f"unknown variant {variant!r}")

    return objective


def primal_solve(state: AgentState, objective, steps: int, learning_rate: float,
                 rng, grad_threshold: float = 0.0, count_mode: str = "per_step",
                 grad_log=None):
    """Run the primal phase: `steps` gradient-descent steps from state.params.

    Each step evaluates the objective at the current iterate, descends, and
    feeds the local-term gradient into the update counts (every step in
    per_step mode; a single OR-combined increment per round in per_round
    mode). Returns the last ObjectiveEval, whose losses are the values seen
    at the final gradient evaluation.
    """
    theta = state.params.copy()
    pending = None
    ev = None
    for _ in range(steps):
        ev = objective(theta, rng)
        if grad_log is not None:
            grad_log.append(np.array(ev.local_grad, copy=True))
        if count_mode == "per_step":
            state.counts = record_gradient(state.counts, ev.local_grad, grad_threshold)
        else:
            mask = touched_mask(ev.local_grad, grad_threshold)
            pending = mask if pending is None else (pending | mask)
        theta = theta - learning_rate * ev.grad
    if pending is not None:
        state.counts = state.counts + pending
    state.params = theta
    return ev


def advance_agent(state: AgentState, received, cfg: OptimizerConfig, local_eval,
                  rng, grad_log=None):
    """One full round for one agent: dual phase, then primal phase.

    `received` lists this round's deliveries (sorted by sender). When
    `local_eval` is None (agent has no data yet) the primal phase is
    skipped and None is returned; dual bookkeeping still runs.
    """
    received = sorted(received, key=lambda m: m.sender)
    theta_round = state.params.copy()
    weights_by_sender = None
    if cfg.variant == "baseline_cadmm":
        dual_update_aggregate(state, received, cfg.rho)
    elif cfg.variant == "udon":
        weights_by_sender = {}
        for msg in received:
            w = compute_weights(state.counts, msg.counts, cfg.beta_lower, cfg.beta_upper)
            weights_by_sender[msg.sender] = w
            dual_update_edge(state, msg, cfg.rho, weights=w)
    if local_eval is None:
        return None
    objective = make_primal_objective(
        cfg, local_eval, theta_round, received,
        aggregate_dual=state.aggregate_dual, edge_duals=state.edge_duals,
        weights_by_sender=weights_by_sender)
    return primal_solve(state, objective, cfg.steps_per_round, cfg.learning_rate,
                        rng, cfg.grad_threshold, cfg.count_mode, grad_log=grad_log)
