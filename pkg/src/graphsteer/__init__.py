"""Reward-steered sampling from graph diffusion priors.

Closed-form score models (Gaussian and exact empirical-mixture priors) drive
a DDPM-style reverse chain whose trajectory is steered toward arbitrary
reward functions, either through the denoiser chain rule (differentiable
rewards) or through zeroth-order direction estimators (black-box rewards).
"""

__version__ = "0.1.0"

from .estimator import GuidedGraphGenerator
from .guidance import ControllerConfig, ControlSignal
from .priors import EmpiricalMixturePrior, GaussianPrior
from .rewards import (
    ConstraintSpec,
    ObservationMask,
    Reward,
    SensitiveAttributes,
    constraint_reward,
    fairness_reward,
    link_observation_reward,
    quantize,
    star_reward,
)
from .sampler import SamplerConfig, Trajectory, batch_sample, guided_sample
from .schedule import NoiseSchedule, build_schedule
from .state import GraphState

__all__ = [
    "__version__",
    "GuidedGraphGenerator",
    "ControllerConfig",
    "ControlSignal",
    "EmpiricalMixturePrior",
    "GaussianPrior",
    "ConstraintSpec",
    "ObservationMask",
    "Reward",
    "SensitiveAttributes",
    "constraint_reward",
    "fairness_reward",
    "link_observation_reward",
    "quantize",
    "star_reward",
    "SamplerConfig",
    "Trajectory",
    "batch_sample",
    "guided_sample",
    "NoiseSchedule",
    "build_schedule",
    "GraphState",
]
