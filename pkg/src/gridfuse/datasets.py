"""Per-agent streaming observation sets over rectangular coverage regions."""

from dataclasses import dataclass

import numpy as np

from .scene import Scene


@dataclass(frozen=True)
class Rect:
    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if np.any(lo < 0.0) or np.any(hi > 1.0) or not np.all(lo < hi):
            raise ValueError(f"coverage rect [{self.lo}, {self.hi}] must be a proper "
                             "sub-rectangle of the unit square")

    @property
    def area(self) -> float:
        return (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return lo + rng.random((n, 2)) * (hi - lo)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.all((pts >= np.asarray(self.lo)) & (pts <= np.asarray(self.hi)), axis=1)


def strip_coverages(n_agents: int, overlap: float = 0.2) -> list[Rect]:
    """Vertical strips spanning the square; adjacent strips overlap by
    `overlap` of the strip width. The strip union covers [0,1]^2 exactly."""
    if n_agents < 1:
        raise ValueError("need at least one agent")
    if n_agents == 1:
        return [Rect((0.0, 0.0), (1.0, 1.0))]
    width = 1.0 / (n_agents - overlap * (n_agents - 1))
    step = width * (1.0 - overlap)
    rects = []
    for i in range(n_agents):
        x0 = i * step
        x1 = min(x0 + width, 1.0)
        rects.append(Rect((x0, 0.0), (x1, 1.0)))
    return rects


class AgentDataset:
    """Append-only observation store for one agent.

    Observations are (point, value) pairs; points always fall inside the
    agent's coverage region(s) and the store only ever grows.
    """

    def __init__(self, coverage, obs_per_round: int, noise_sigma: float):
        if isinstance(coverage, Rect):
            coverage = [coverage]
        if obs_per_round < 0:
            raise ValueError("obs_per_round must be >= 0")
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        self.coverage = list(coverage)
        self.obs_per_round = int(obs_per_round)
        self.noise_sigma = float(noise_sigma)
        self._points = np.empty((0, 2))
        self._values = np.empty(0)
        self._size = 0

    @property
    def size(self) -> int:
        return self._size

    @property
    def points(self) -> np.ndarray:
        return self._points[:self._size]

    @property
    def values(self) -> np.ndarray:
        return self._values[:self._size]

    def _grow(self, extra: int):
        need = self._size + extra
        cap = self._points.shape[0]
        if need <= cap:
            return
        new_cap = max(need, 2 * cap, 256)
        pts = np.empty((new_cap, 2))
        vals = np.empty(new_cap)
        pts[:self._size] = self._points[:self._size]
        vals[:self._size] = self._values[:self._size]
        self._points = pts
        self._values = vals

    def append(self, points: np.ndarray, values: np.ndarray):
        points = np.atleast_2d(points)
        values = np.atleast_1d(values)
        n = points.shape[0]
        self._grow(n)
        self._points[self._size:self._size + n] = points
        self._values[self._size:self._size + n] = values
        self._size += n

    def sample_coverage(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points over the union of coverage rects (area-weighted)."""
        if len(self.coverage) == 1:
            return self.coverage[0].sample(n, rng)
        areas = np.array([r.area for r in self.coverage])
        which = rng.choice(len(self.coverage), size=n, p=areas / areas.sum())
        pts = np.empty((n, 2))
        for i, rect in enumerate(self.coverage):
            mask = which == i
            if np.any(mask):
                pts[mask] = rect.sample(int(mask.sum()), rng)
        return pts

    def sample_batch(self, batch_size: int, rng: np.random.Generator):
        """Mini-batch drawn uniformly without replacement from the store."""
        if self._size == 0:
            raise ValueError("dataset is empty")
        k = min(batch_size, self._size)
        sel = rng.choice(self._size, size=k, replace=False)
        return self._points[sel], self._values[sel]


def sample_observations(dataset: AgentDataset, scene: Scene, rng: np.random.Generator):
    """Append one round's worth of noisy signed-distance observations.

    Draws `dataset.obs_per_round` points uniformly from the agent's coverage
    and records scene values plus zero-mean Gaussian noise. Deterministic
    given the rng state. Returns the appended (points, values).
    """
    n = dataset.obs_per_round
    if n == 0:
        return np.empty((0, 2)), np.empty(0)
    pts = dataset.sample_coverage(n, rng)
    vals = scene.sdf(pts)
    if dataset.noise_sigma > 0:
        vals = vals + dataset.noise_sigma * rng.standard_normal(n)
    dataset.append(pts, vals)
    return pts, vals
