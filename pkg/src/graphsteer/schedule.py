"""Discrete variance-preserving noise schedule.

The per-step noise rate ramps linearly, beta_t = beta_min + (beta_max -
beta_min) * t / (T - 1), and is capped at BETA_CAP so the per-step retention
alpha_t = 1 - beta_t stays positive even for short, aggressive schedules. The
marginal at step t is a_t * g0 + sigma_t * noise with a_t = sqrt(prod alpha)
and a_t^2 + sigma_t^2 = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .state import GraphState

BETA_CAP = 0.999


@dataclass(frozen=True)
class NoiseSchedule:
    steps: int
    beta_min: float
    beta_max: float
    betas: np.ndarray
    step_alphas: np.ndarray
    cum_alphas: np.ndarray
    marginal_scale: np.ndarray
    marginal_std: np.ndarray


def build_schedule(steps: int, beta_min: float, beta_max: float) -> NoiseSchedule:
    """Build the linear-ramp schedule with all derived coefficient arrays."""
    if steps < 2:
        raise ConfigurationError(f"schedule needs at least 2 steps, got {steps}")
    if beta_min <= 0.0:
        raise ConfigurationError(f"beta_min must be positive, got {beta_min}")
    if beta_max <= beta_min:
        raise ConfigurationError(
            f"beta_max ({beta_max}) must exceed beta_min ({beta_min})"
        )
    betas = np.minimum(np.linspace(beta_min, beta_max, steps), BETA_CAP)
    step_alphas = 1.0 - betas
    cum_alphas = np.cumprod(step_alphas)
    return NoiseSchedule(
        steps=steps,
        beta_min=beta_min,
        beta_max=beta_max,
        betas=betas,
        step_alphas=step_alphas,
        cum_alphas=cum_alphas,
        marginal_scale=np.sqrt(cum_alphas),
        marginal_std=np.sqrt(1.0 - cum_alphas),
    )


def _check_index(schedule: NoiseSchedule, t: int) -> int:
    t = int(t)
    if not 0 <= t < schedule.steps:
        raise ValueError(f"time index {t} out of range [0, {schedule.steps})")
    return t


def diffusion_coefficient(schedule: NoiseSchedule, t: int) -> float:
    """g(t) = sqrt(beta_t)."""
    return float(np.sqrt(schedule.betas[_check_index(schedule, t)]))


def forward_perturb(
    schedule: NoiseSchedule, g0: GraphState, t: int, noise: GraphState
) -> GraphState:
    """Sample the forward marginal: a_t * g0 + sigma_t * noise.

    The caller owns the randomness; `noise` must hold standard-normal draws
    mirrored into the symmetric subspace and have the same shape as `g0`.
    """
    t = _check_index(schedule, t)
    if noise.shape != g0.shape:
        raise ValueError(f"noise shape {noise.shape} != state shape {g0.shape}")
    return float(schedule.marginal_scale[t]) * g0 + float(schedule.marginal_std[t]) * noise
