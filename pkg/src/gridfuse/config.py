"""Experiment configuration: YAML schema, validation, and seed derivation.

Configs are flat YAML mappings (the scene and coverage entries nest one
level). Unknown keys are rejected with the offending path so typos fail
fast. Every run artifact is a pure function of the resolved config, which
is echoed (defaults and derived seeds included) into summary.json.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np
import yaml

from .datasets import Rect, strip_coverages
from .optimizer import COUNT_MODES, VARIANTS, OptimizerConfig
from .network import COMM_MODES
from .scene import Box, Circle, Scene, default_scene


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the field path."""


DEFAULT_SCENE_SPEC = [
    {"type": "circle", "center": [0.5, 0.5], "radius": 0.25},
    {"type": "box", "min": [0.72, 0.12], "max": [0.92, 0.32]},
]


@dataclass(frozen=True)
class ExperimentConfig:
    scene: tuple = None               # tuple of shape spec dicts; None -> default scene
    agents: int = 3
    coverage: tuple = None            # per-agent [[xmin,ymin],[xmax,ymax]]; None -> strips
    coverage_overlap: float = 0.2
    grid_levels: tuple = (8, 32)
    variant: str = "udon"
    rho: float = 0.05
    steps_per_round: int = 5          # B
    learning_rate: float = 0.01      # eta
    smoothness_weight: float = 0.1   # lambda
    beta_lower: float = 0.1
    beta_upper: float = 1.0
    grad_threshold: float = 0.0      # tau
    count_mode: str = "per_step"
    comm_rate: float = 1.0
    comm_mode: str = "symmetric"
    rounds: int = 2000
    batch_size: int = 64
    obs_per_round: int = 10
    noise_sigma: float = 0.01
    eval_resolution: int = 65
    completion_tolerance: float = 0.05
    seed: int = 0
    agent_seeds: tuple = None        # None -> derived from master seed
    edge_seed: int = None            # None -> derived from master seed
    out_dir: str = None
    log_gradients: bool = False

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            variant=self.variant, rho=self.rho,
            steps_per_round=self.steps_per_round,
            learning_rate=self.learning_rate,
            beta_lower=self.beta_lower, beta_upper=self.beta_upper,
            smoothness_weight=self.smoothness_weight,
            grad_threshold=self.grad_threshold,
            count_mode=self.count_mode)


_FIELD_NAMES = {f.name for f in dataclasses.fields(ExperimentConfig)}

_SHAPE_KEYS = {
    "circle": {"type", "center", "radius"},
    "box": {"type", "min", "max"},
}


def _require(cond, path, message):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def config_from_dict(raw: dict, source: str = "config") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")
    unknown = set(raw) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"{source}.{sorted(unknown)[0]}: unknown key "
                          f"(known keys: {', '.join(sorted(_FIELD_NAMES))})")
    kwargs = dict(raw)
    if "scene" in kwargs and kwargs["scene"] is not None:
        kwargs["scene"] = tuple(
            _validate_shape(s, f"{source}.scene[{i}]") for i, s in enumerate(kwargs["scene"]))
    if "coverage" in kwargs and kwargs["coverage"] is not None:
        kwargs["coverage"] = tuple(
            tuple(tuple(float(x) for x in corner) for corner in rect)
            for rect in kwargs["coverage"])
    if "grid_levels" in kwargs:
        kwargs["grid_levels"] = tuple(int(r) for r in kwargs["grid_levels"])
    if "agent_seeds" in kwargs and kwargs["agent_seeds"] is not None:
        kwargs["agent_seeds"] = tuple(int(s) for s in kwargs["agent_seeds"])
    cfg = ExperimentConfig(**kwargs)
    validate_config(cfg, source)
    return cfg


def _validate_shape(spec, path) -> dict:
    _require(isinstance(spec, dict), path, "shape spec must be a mapping")
    kind = spec.get("type")
    _require(kind in _SHAPE_KEYS, f"{path}.type",
             f"unknown shape type {kind!r} (circle or box)")
    unknown = set(spec) - _SHAPE_KEYS[kind]
    _require(not unknown, f"{path}.{sorted(unknown)[0] if unknown else ''}",
             f"unknown shape key for {kind}")
    missing = _SHAPE_KEYS[kind] - set(spec)
    _require(not missing, path, f"missing keys {sorted(missing)} for {kind}")
    return dict(spec)


def validate_config(cfg: ExperimentConfig, source: str = "config"):
    _require(cfg.agents >= 1, f"{source}.agents", "must be >= 1")
    _require(len(cfg.grid_levels) >= 1 and all(r >= 1 for r in cfg.grid_levels),
             f"{source}.grid_levels", "must be a non-empty list of resolutions >= 1")
    _require(cfg.variant in VARIANTS, f"{source}.variant",
             f"must be one of {', '.join(VARIANTS)}")
    _require(cfg.rho > 0, f"{source}.rho", "must be > 0")
    _require(cfg.steps_per_round >= 1, f"{source}.steps_per_round", "must be >= 1")
    _require(cfg.learning_rate > 0, f"{source}.learning_rate", "must be > 0")
    _require(cfg.smoothness_weight >= 0, f"{source}.smoothness_weight", "must be >= 0")
    _require(0 < cfg.beta_lower <= cfg.beta_upper, f"{source}.beta_lower",
             "need 0 < beta_lower <= beta_upper")
    _require(cfg.grad_threshold >= 0, f"{source}.grad_threshold", "must be >= 0")
    _require(cfg.count_mode in COUNT_MODES, f"{source}.count_mode",
             f"must be one of {', '.join(COUNT_MODES)}")
    _require(0 < cfg.comm_rate <= 1, f"{source}.comm_rate", "must be in (0, 1]")
    _require(cfg.comm_mode in COMM_MODES, f"{source}.comm_mode",
             f"must be one of {', '.join(COMM_MODES)}")
    _require(cfg.rounds >= 0, f"{source}.rounds", "must be >= 0")
    _require(cfg.batch_size >= 1, f"{source}.batch_size", "must be >= 1")
    _require(cfg.obs_per_round >= 0, f"{source}.obs_per_round", "must be >= 0")
    _require(cfg.noise_sigma >= 0, f"{source}.noise_sigma", "must be >= 0")
    _require(cfg.eval_resolution >= 2, f"{source}.eval_resolution", "must be >= 2")
    _require(cfg.completion_tolerance > 0, f"{source}.completion_tolerance", "must be > 0")
    _require(0 <= cfg.coverage_overlap < 1, f"{source}.coverage_overlap",
             "must be in [0, 1)")
    if cfg.coverage is not None:
        _require(len(cfg.coverage) == cfg.agents, f"{source}.coverage",
                 f"needs one rect per agent ({cfg.agents})")
        for i, rect in enumerate(cfg.coverage):
            try:
                Rect(tuple(rect[0]), tuple(rect[1]))
            except (ValueError, IndexError, TypeError) as exc:
                raise ConfigError(f"{source}.coverage[{i}]: {exc}") from exc
    if cfg.agent_seeds is not None:
        _require(len(cfg.agent_seeds) == cfg.agents, f"{source}.agent_seeds",
                 f"needs one seed per agent ({cfg.agents})")
    # Scene shape parameters are validated by the shape constructors.
    build_scene(cfg)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    return config_from_dict(raw, source=str(path))


def build_scene(cfg: ExperimentConfig) -> Scene:
    spec = cfg.scene if cfg.scene is not None else DEFAULT_SCENE_SPEC
    shapes = []
    for i, s in enumerate(spec):
        try:
            if s["type"] == "circle":
                shapes.append(Circle(center=tuple(s["center"]), radius=float(s["radius"])))
            else:
                shapes.append(Box(lo=tuple(s["min"]), hi=tuple(s["max"])))
        except ValueError as exc:
            raise ConfigError(f"config.scene[{i}]: {exc}") from exc
    return Scene(tuple(shapes))


def build_coverages(cfg: ExperimentConfig) -> list:
    if cfg.coverage is None:
        return strip_coverages(cfg.agents, cfg.coverage_overlap)
    return [Rect(tuple(r[0]), tuple(r[1])) for r in cfg.coverage]


@dataclass(frozen=True)
class ResolvedSeeds:
    master: int
    agent_data: tuple
    agent_batch: tuple
    edge: int


def derive_seeds(cfg: ExperimentConfig) -> ResolvedSeeds:
    """Expand the master seed into explicit per-agent and per-edge seeds.

    Data, batch, and link streams are all independent, so optimizer and
    network settings never perturb each other's randomness.
    """
    root = np.random.SeedSequence(cfg.seed)
    agent_entropy = [int(ss.generate_state(1)[0]) for ss in root.spawn(cfg.agents)]
    if cfg.agent_seeds is not None:
        agent_entropy = list(cfg.agent_seeds)
    data_seeds = []
    batch_seeds = []
    for s in agent_entropy:
        kids = np.random.SeedSequence(s).spawn(2)
        data_seeds.append(int(kids[0].generate_state(1)[0]))
        batch_seeds.append(int(kids[1].generate_state(1)[0]))
    edge = cfg.edge_seed
    if edge is None:
        edge = int(np.random.SeedSequence((cfg.seed, 0xED6E)).generate_state(1)[0])
    return ResolvedSeeds(master=cfg.seed, agent_data=tuple(data_seeds),
                         agent_batch=tuple(batch_seeds), edge=int(edge))


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """Full config echo with defaults filled in and seeds made explicit."""
    out = dataclasses.asdict(cfg)
    out["scene"] = [dict(s) for s in (cfg.scene if cfg.scene is not None
                                      else DEFAULT_SCENE_SPEC)]
    coverages = build_coverages(cfg)
    out["coverage"] = [[list(r.lo), list(r.hi)] for r in coverages]
    seeds = derive_seeds(cfg)
    out["resolved_seeds"] = {
        "master": seeds.master,
        "agent_data": list(seeds.agent_data),
        "agent_batch": list(seeds.agent_batch),
        "edge": seeds.edge,
    }
    out["grid_levels"] = list(cfg.grid_levels)
    if cfg.agent_seeds is not None:
        out["agent_seeds"] = list(cfg.agent_seeds)
    return out
