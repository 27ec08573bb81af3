"""Multi-resolution bilinear value grids over the unit square.

A map holds one scalar value per grid vertex, concatenated over levels into
a single flat parameter vector. Layout is level-major in the configured
order; within a level of resolution R (R x R cells, (R+1)^2 vertices) the
vertex (ix, iy) sits at flat index iy*(R+1) + ix, i.e. row-major with rows
along y. Queries sum the bilinear interpolation of every level, so the
query value is linear in the parameters and each query reads exactly four
parameters per level.
"""

import numpy as np

from .scene import check_domain


class GridMap:
    def __init__(self, levels, params=None):
        levels = tuple(int(r) for r in levels)
        if len(levels) == 0 or any(r < 1 for r in levels):
            raise ValueError(f"levels must be positive resolutions, got {levels}")
        self.levels = levels
        sizes = [(r + 1) ** 2 for r in levels]
        self.offsets = tuple(np.concatenate([[0], np.cumsum(sizes)]).tolist())
        self.n_params = int(self.offsets[-1])
        if params is None:
            params = np.zeros(self.n_params)
        else:
            params = np.asarray(params, dtype=float)
            if params.shape != (self.n_params,):
                raise ValueError(
                    f"params length {params.shape} does not match levels {levels} "
                    f"(expected {self.n_params})")
        self.params = params

    @classmethod
    def zeros(cls, levels):
        return cls(levels)

    def copy(self):
        return GridMap(self.levels, self.params.copy())

    def level_view(self, params, level_index):
        """(R+1, R+1) view of one level's vertices in a flat vector, rows = iy."""
        r = self.levels[level_index]
        lo, hi = self.offsets[level_index], self.offsets[level_index + 1]
        return params[lo:hi].reshape(r + 1, r + 1)

    def support(self, pts: np.ndarray):
        """Flat indices and bilinear weights touched by each point.

        Returns (idx, wts) of shape (n, 4 * n_levels); the query value at
        point p is sum(params[idx[p]] * wts[p]).
        """
        n = pts.shape[0]
        nl = len(self.levels)
        idx = np.empty((n, 4 * nl), dtype=np.int64)
        wts = np.empty((n, 4 * nl))
        for li, r in enumerate(self.levels):
            t = pts * r
            c = np.minimum(t.astype(np.int64), r - 1)  # x == 1.0 lands in the last cell
            f = t - c
            fx, fy = f[:, 0], f[:, 1]
            base = self.offsets[li] + c[:, 1] * (r + 1) + c[:, 0]
            cols = slice(4 * li, 4 * li + 4)
            idx[:, cols] = base[:, None] + np.array([0, 1, r + 1, r + 2])
            wts[:, 4 * li + 0] = (1.0 - fx) * (1.0 - fy)
            wts[:, 4 * li + 1] = fx * (1.0 - fy)
            wts[:, 4 * li + 2] = (1.0 - fx) * fy
            wts[:, 4 * li + 3] = fx * fy
        return idx, wts

    def query(self, points):
        """Interpolated value at each point; scalar in, scalar out."""
        pts = check_domain(points)
        idx, wts = self.support(pts)
        vals = np.einsum("ij,ij->i", self.params[idx], wts)
        if np.asarray(points).ndim == 1:
            return float(vals[0])
        return vals


def grid_query(gmap: GridMap, point):
    return gmap.query(point)


def smoothness(gmap: GridMap, params=None):
    """Mean squared difference over axis-adjacent vertex pairs, per level.

    Each level is averaged over its own 2*R*(R+1) edges; levels are then
    summed. Returns (loss, grad) with grad flat like params.
    """
    p = gmap.params if params is None else params
    loss = 0.0
    grad = np.zeros_like(p)
    for li, r in enumerate(gmap.levels):
        v = gmap.level_view(p, li)
        gv = gmap.level_view(grad, li)
        n_edges = 2 * r * (r + 1)
        dh = v[:, 1:] - v[:, :-1]
        dv = v[1:, :] - v[:-1, :]
        loss += (np.sum(dh * dh) + np.sum(dv * dv)) / n_edges
        scale = 2.0 / n_edges
        gv[:, 1:] += scale * dh
        gv[:, :-1] -= scale * dh
        gv[1:, :] += scale * dv
        gv[:-1, :] -= scale * dv
    return loss, grad


def local_objective(gmap: GridMap, points, values, smoothness_weight):
    """Reconstruction loss against a batch plus weighted smoothness.

    loss = mean((query(p) - value)^2) + w * smoothness; the gradient is the
    exact analytic gradient with respect to the flat parameter vector.
    Parameters outside every batch point's bilinear support and with no
    smoothness contribution get an exactly zero gradient entry.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.atleast_1d(np.asarray(values, dtype=float))
    if pts.shape[0] == 0:
        raise ValueError("local objective needs a non-empty batch")
    if pts.shape[0] != vals.shape[0]:
        raise ValueError(f"batch size mismatch: {pts.shape[0]} points, {vals.shape[0]} values")
    if smoothness_weight < 0.0:
        raise ValueError("smoothness weight must be >= 0")
    check_domain(pts)
    n = pts.shape[0]
    idx, wts = gmap.support(pts)
    pred = np.einsum("ij,ij->i", gmap.params[idx], wts)
    resid = pred - vals
    loss = float(np.mean(resid * resid))
    grad = np.zeros_like(gmap.params)
    np.add.at(grad, idx.ravel(), ((2.0 / n) * resid[:, None] * wts).ravel())
    if smoothness_weight > 0.0:
        s_loss, s_grad = smoothness(gmap)
        loss += smoothness_weight * s_loss
        grad += smoothness_weight * s_grad
    return loss, grad
