"""Frequency-based per-parameter uncertainty and pairwise trust weights.

Each agent counts, per map parameter, how many gradient steps touched that
parameter; a higher count means the parameter is better observed. When two
agents fuse maps, the pair of count vectors is rescaled by a shared affine
map into [beta_lower, beta_upper] and used as diagonal trust weights.
"""

import numpy as np


def record_gradient(counts: np.ndarray, gradient: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Return counts incremented where |gradient| exceeds the threshold."""
    counts = np.asarray(counts)
    gradient = np.asarray(gradient)
    if counts.shape != gradient.shape:
        raise ValueError(f"length mismatch: counts {counts.shape}, gradient {gradient.shape}")
    if threshold < 0.0:
        raise ValueError("threshold must be >= 0")
    return counts + (np.abs(gradient) > threshold)


def touched_mask(gradient: np.ndarray, threshold: float = 0.0) -> np.ndarray:
    """Binarized gradient: True where |gradient| exceeds the threshold."""
    return np.abs(np.asarray(gradient)) > threshold


def compute_weights(u_i: np.ndarray, u_j: np.ndarray, beta_lower: float, beta_upper: float):
    """Trust-weight pair (w_ij, w_ji) for two agents' count vectors.

    The shared scale and shift map the pairwise count sum onto
    [beta_lower, beta_upper], preserving relative proportions; individual
    weights are clipped to the same range so they stay positive and the
    pair sum stays invertible. When the count sum is constant the map is
    degenerate and both weight vectors are the constant midpoint
    (beta_lower + beta_upper) / 2.

    Symmetric by construction: swapping the inputs swaps the outputs
    bit-exactly.
    """
    u_i = np.asarray(u_i)
    u_j = np.asarray(u_j)
    if u_i.shape != u_j.shape:
        raise ValueError(f"length mismatch: {u_i.shape} vs {u_j.shape}")
    if beta_lower <= 0.0:
        raise ValueError("beta_lower must be > 0 (weights must stay invertible)")
    if beta_upper < beta_lower:
        raise ValueError("beta_upper must be >= beta_lower")
    u_sum = u_i + u_j
    lo = u_sum.min()
    hi = u_sum.max()
    if hi == lo:
        mid = 0.5 * (beta_lower + beta_upper)
        return np.full(u_i.shape, mid), np.full(u_j.shape, mid)
    eps = (beta_upper - beta_lower) / (hi - lo)
    zeta = beta_lower - eps * lo
    w_ij = np.clip(eps * u_i + zeta, beta_lower, beta_upper)
    w_ji = np.clip(eps * u_j + zeta, beta_lower, beta_upper)
    return w_ij, w_ji
