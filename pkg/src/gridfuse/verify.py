"""Independent verification oracles and the built-in check suite.

The finite-difference routine here is the reference side of every gradient
check: it only ever calls an objective's loss value, never its analytic
gradient, so the two sides stay independent.
"""

import numpy as np

from .grid import GridMap, local_objective
from .optimizer import (OptimizerConfig, ReceivedMessage, VARIANTS,
                        make_primal_objective)
from .quadratic import QuadraticProblem, run_quadratic_consensus, solve_quadratic_closed_form
from .uncertainty import compute_weights


def finite_difference_gradient(loss_fn, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar loss, one coordinate at a time."""
    grad = np.empty_like(theta)
    for k in range(theta.size):
        up = theta.copy()
        up[k] += h
        down = theta.copy()
        down[k] -= h
        grad[k] = (loss_fn(up) - loss_fn(down)) / (2.0 * h)
    return grad


def relative_error(approx: np.ndarray, reference: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(reference)), 1e-12)
    return float(np.linalg.norm(approx - reference)) / denom


def random_primal_instance(variant: str, rng: np.random.Generator,
                           levels=(2, 3), batch_size: int = 12, n_neighbors=None):
    """Random small objective instance for one variant.

    Returns (objective, theta0) where objective(theta, rng) evaluates the
    variant's primal objective on a frozen batch, so it is a deterministic
    function of theta.
    """
    gmap = GridMap(levels)
    n = gmap.n_params
    theta0 = rng.standard_normal(n)
    pts = rng.random((batch_size, 2))
    vals = rng.standard_normal(batch_size)
    lam = float(rng.uniform(0.0, 0.5))
    rho = float(rng.uniform(0.01, 1.0))
    cfg = OptimizerConfig(variant=variant, rho=rho, smoothness_weight=lam)

    def local_eval(theta, _rng):
        gmap.params = theta
        return local_objective(gmap, pts, vals, lam)

    if n_neighbors is None:
        n_neighbors = int(rng.integers(1, 4))
    received = []
    weights_by_sender = {}
    edge_duals = {}
    counts_self = rng.integers(0, 50, size=n)
    for j in range(1, n_neighbors + 1):
        msg = ReceivedMessage.snapshot(j, rng.standard_normal(n),
                                       rng.integers(0, 50, size=n), 0)
        received.append(msg)
        weights_by_sender[j] = compute_weights(counts_self, msg.counts,
                                               cfg.beta_lower, cfg.beta_upper)
        edge_duals[j] = rng.standard_normal(n)
    aggregate_dual = rng.standard_normal(n)

    objective = make_primal_objective(
        cfg, local_eval, theta_round=theta0.copy(), received=received,
        aggregate_dual=aggregate_dual, edge_duals=edge_duals,
        weights_by_sender=weights_by_sender)
    return objective, theta0


def check_variant_gradients(n_instances_per_variant: int = 25, seed: int = 20240817,
                            h: float = 1e-5):
    """Max FD relative error per variant over random instances."""
    rng = np.random.default_rng(seed)
    worst = {}
    for variant in VARIANTS:
        errs = []
        for _ in range(n_instances_per_variant):
            objective, theta0 = random_primal_instance(variant, rng)
            theta = theta0 + 0.1 * rng.standard_normal(theta0.size)
            analytic = objective(theta, None).grad
            fd = finite_difference_gradient(lambda th: objective(th, None).total, theta, h)
            errs.append(relative_error(analytic, fd))
        worst[variant] = max(errs)
    return worst


def check_weight_properties(n_pairs: int = 1000, seed: int = 7,
                            beta_lower: float = 0.1, beta_upper: float = 1.0,
                            length: int = 16):
    """Range, swap symmetry, and degenerate fallback of the trust weights.

    Returns a dict of booleans; count pairs are unconstrained non-negative
    integers (mixed scales, including shared-zero and disjoint supports).
    """
    rng = np.random.default_rng(seed)
    tol = 1e-12
    range_ok = True
    swap_ok = True
    for _ in range(n_pairs):
        scale = int(rng.integers(1, 200))
        u_i = rng.integers(0, scale, size=length)
        u_j = rng.integers(0, scale, size=length)
        w_ij, w_ji = compute_weights(u_i, u_j, beta_lower, beta_upper)
        for w in (w_ij, w_ji):
            if w.min() < beta_lower - tol or w.max() > beta_upper + tol:
                range_ok = False
        s_ji, s_ij = compute_weights(u_j, u_i, beta_lower, beta_upper)
        if not (np.array_equal(w_ij, s_ij) and np.array_equal(w_ji, s_ji)):
            swap_ok = False
    const = rng.integers(0, 10)
    w_ij, w_ji = compute_weights(np.full(length, const), np.full(length, const),
                                 beta_lower, beta_upper)
    mid = 0.5 * (beta_lower + beta_upper)
    degenerate_ok = bool(np.all(w_ij == mid) and np.all(w_ji == mid))
    return {"range": range_ok, "swap_symmetry": swap_ok, "degenerate": degenerate_ok}


def check_quadratic_consensus(variant: str, n_agents: int = 5, dim: int = 8,
                              rate: float = 1.0, rounds: int = 500, seed: int = 3,
                              rho: float = 0.5, steps: int = 20, lr: float = 0.05):
    """Final relative distance of every agent to the pooled optimum."""
    rng = np.random.default_rng(seed)
    problem = QuadraticProblem.random(n_agents, dim, rng)
    cfg = OptimizerConfig(variant=variant, rho=rho, steps_per_round=steps,
                          learning_rate=lr)
    result = run_quadratic_consensus(problem, cfg, rate, rounds, seed)
    return float(result.rel_distances[-1]), result


def check_closed_form_solver(seed: int = 11):
    """Gradient residual at the closed-form pooled optimum."""
    rng = np.random.default_rng(seed)
    problem = QuadraticProblem.random(5, 8, rng)
    theta = solve_quadratic_closed_form(problem)
    grad = sum(2.0 * a.T @ (a @ theta - b) for a, b in zip(problem.mats, problem.rhs))
    return float(np.linalg.norm(grad))


def run_verification(fast: bool = False):
    """Built-in check suite; returns a list of (name, passed, detail)."""
    results = []
    n_inst = 5 if fast else 25
    worst = check_variant_gradients(n_instances_per_variant=n_inst)
    for variant, err in worst.items():
        results.append((f"gradient_check[{variant}]", err < 1e-5, f"max rel err {err:.2e}"))
    props = check_weight_properties(n_pairs=100 if fast else 1000)
    for name, ok in props.items():
        results.append((f"weight_{name}", ok, ""))
    resid = check_closed_form_solver()
    results.append(("quadratic_closed_form_residual", resid < 1e-8, f"{resid:.2e}"))
    rounds = 200 if fast else 500
    for variant in ("baseline_cadmm", "udon"):
        rel, _ = check_quadratic_consensus(variant, rounds=rounds)
        results.append((f"quadratic_consensus[{variant}]", rel < 1e-3, f"rel dist {rel:.2e}"))
    return results
