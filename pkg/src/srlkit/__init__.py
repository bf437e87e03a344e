"""Structured policies over combinatorial action spaces.

The package trains score-model policies whose last layer is an exact
combinatorial solver, with a perturbation-based loss that keeps the
whole pipeline differentiable, alongside imitation and proximal-policy
baselines on three benchmark control problems.
"""

from .agents import (
    ExactCritic,
    ReplayBuffer,
    ScoreActor,
    Transition,
    ValueCritics,
    imitation_update,
    ppo_update,
    srl_actor_update,
    target_action,
)
from .colayers import (
    GridPathSpace,
    RankingSpace,
    TopKSpace,
    argmax_action,
    brute_force_argmax,
    enumerate_actions,
    grid_path_argmax,
    ranking_argmax,
    topk_argmax,
)
from .config import config_hash, load_config, parse_config, render_config
from .harness import RunReport, load_dataset, run_evaluation, run_training, save_dataset
from .learners import PolicyBaseline, PPOLearner, SILLearner, SRLLearner
from .models import ModelSpec, ParamSet, ScheduleSpec
from .perturb import (
    FYLossResult,
    fy_loss_and_grad,
    gaussian_perturb,
    perturbed_candidates,
    smoothed_max_estimate,
    softmax_target,
)
from .tasks import DapTask, GsppTask, SeededInstance, SmspTask, build_task

__all__ = [
    "ExactCritic",
    "ReplayBuffer",
    "ScoreActor",
    "Transition",
    "ValueCritics",
    "imitation_update",
    "ppo_update",
    "srl_actor_update",
    "target_action",
    "GridPathSpace",
    "RankingSpace",
    "TopKSpace",
    "argmax_action",
    "brute_force_argmax",
    "enumerate_actions",
    "grid_path_argmax",
    "ranking_argmax",
    "topk_argmax",
    "config_hash",
    "load_config",
    "parse_config",
    "render_config",
    "RunReport",
    "load_dataset",
    "run_evaluation",
    "run_training",
    "save_dataset",
    "PolicyBaseline",
    "PPOLearner",
    "SILLearner",
    "SRLLearner",
    "ModelSpec",
    "ParamSet",
    "ScheduleSpec",
    "FYLossResult",
    "fy_loss_and_grad",
    "gaussian_perturb",
    "perturbed_candidates",
    "smoothed_max_estimate",
    "softmax_target",
    "DapTask",
    "GsppTask",
    "SeededInstance",
    "SmspTask",
    "build_task",
    "__version__",
]

__version__ = "0.1.0"
