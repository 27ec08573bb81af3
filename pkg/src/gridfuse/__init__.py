"""Decentralized multi-agent consensus mapping on 2D grid fields over lossy links."""

from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .datasets import AgentDataset, Rect, sample_observations, strip_coverages
from .experiment import OracleResult, RunResult, centralized_oracle, run_experiment
from .grid import GridMap, grid_query, local_objective
from .metrics import (RoundLog, completion_ratio, consensus_disagreement, field_rmse,
                      is_divergent, log_norm_slope)
from .network import CommGraph, LinkSchedule, exchange, sample_active_links
from .optimizer import (AgentState, ObjectiveEval, OptimizerConfig, ReceivedMessage,
                        VARIANTS, advance_agent, dual_update_aggregate, dual_update_edge,
                        make_primal_objective, message_payload, primal_solve)
from .quadratic import QuadraticProblem, run_quadratic_consensus, solve_quadratic_closed_form
from .scene import Box, Circle, Scene, default_scene, scene_sdf
from .uncertainty import compute_weights, record_gradient

__version__ = "0.1.0"

__all__ = [
    "AgentDataset", "AgentState", "Box", "Circle", "CommGraph", "ConfigError",
    "ExperimentConfig", "GridMap", "LinkSchedule", "ObjectiveEval", "OptimizerConfig",
    "OracleResult", "QuadraticProblem", "ReceivedMessage", "Rect", "RoundLog",
    "RunResult", "Scene", "VARIANTS", "advance_agent", "centralized_oracle",
    "completion_ratio", "compute_weights", "config_from_dict", "consensus_disagreement",
    "default_scene", "dual_update_aggregate", "dual_update_edge", "exchange",
    "field_rmse", "grid_query", "is_divergent", "load_config", "local_objective",
    "log_norm_slope", "make_primal_objective", "message_payload", "primal_solve",
    "record_gradient", "run_experiment", "run_quadratic_consensus",
    "sample_active_links", "sample_observations", "scene_sdf",
    "solve_quadratic_closed_form", "strip_coverages",
]
