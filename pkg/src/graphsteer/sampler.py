"""Guided reverse-diffusion sampling loop.

Each step runs the ancestral DDPM update from the score model, asks the
configured controller for a direction, and injects it additively:
G_t = G_t_hat + k_eff(t) * U_t. Guidance is purely additive, so a run with
k = 0 is bit-identical to the unguided chain; to make that hold, each chain
splits its seed into two independent streams, one for chain noise and one
for controller perturbations.

The loop runs t = T-2 down to 0 on the 0-based schedule (T-1 guided steps),
starting from a standard-normal state at index T-1. The returned final is
the t=0 state pushed through one extra Tweedie denoise unless configured
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SamplingError, UnsupportedOperationError
from .guidance import ControllerConfig, compute_control, sample_direction
from .priors import ScoreModel
from .rewards import Reward
from .schedule import NoiseSchedule, diffusion_coefficient
from .state import GraphState


@dataclass(frozen=True)
class SamplerConfig:
    schedule: NoiseSchedule
    controller: ControllerConfig | None = None
    add_ancestral_noise: bool = True
    record_trajectory: bool = False
    seed: int = 0
    final_denoise: bool = True
    scale_by_g: bool = False
    k_ramp: bool = False


@dataclass
class Trajectory:
    final: GraphState
    rewards: np.ndarray
    reward_evals_total: int
    states: list[GraphState] | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class BatchResult:
    trajectories: list[Trajectory | None]
    errors: dict[int, str]
    reward_evals_total: int


def reverse_step(
    g_next: GraphState,
    t: int,
    model: ScoreModel,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    add_noise: bool = True,
) -> GraphState:
    """One DDPM ancestral update from index t+1 down to t.

    Posterior mean in epsilon form, plus (for t > 0, when enabled) the
    ancestral noise sqrt(beta_tilde) * z with
    beta_tilde = beta_{t+1} * (1 - abar_t) / (1 - abar_{t+1}).
    """
    if not 0 <= t < schedule.steps - 1:
        raise ValueError(f"target index {t} out of range [0, {schedule.steps - 1})")
    idx = t + 1
    alpha = float(schedule.step_alphas[idx])
    sigma = float(schedule.marginal_std[idx])
    eps = -sigma * model.score(g_next, idx)
    out = (1.0 / np.sqrt(alpha)) * (g_next - ((1.0 - alpha) / sigma) * eps)
    if add_noise and t > 0:
        beta_tilde = (
            float(schedule.betas[idx])
            * (1.0 - float(schedule.cum_alphas[t]))
            / (1.0 - float(schedule.cum_alphas[idx]))
        )
        out = out + np.sqrt(beta_tilde) * sample_direction(g_next.shape, rng)
    return out


def _effective_k(cfg: SamplerConfig, t: int) -> float:
    k = cfg.controller.k
    if cfg.k_ramp:
        k *= 1.0 - t / (cfg.schedule.steps - 1)
    if cfg.scale_by_g:
        k *= diffusion_coefficient(cfg.schedule, t) / cfg.controller.lam
    return k


def _split_streams(seed) -> tuple[np.random.Generator, np.random.Generator]:
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    else:
        ss = np.random.SeedSequence(int(seed))
    chain_ss, ctrl_ss = ss.spawn(2)
    return np.random.default_rng(chain_ss), np.random.default_rng(ctrl_ss)


def guided_sample(
    model: ScoreModel,
    reward: Reward | None,
    cfg: SamplerConfig,
    rng=None,
) -> Trajectory:
    """Run one guided chain. `rng` is seed material (int or SeedSequence);
    omitted, cfg.seed is used."""
    guided = reward is not None and cfg.controller is not None
    if guided and cfg.controller.kind == "gradient" and reward.grad is None:
        raise UnsupportedOperationError(
            f"gradient controller requires an analytic gradient; "
            f"reward {reward.name!r} has none"
        )
    rng_chain, rng_ctrl = _split_streams(cfg.seed if rng is None else rng)
    schedule = cfg.schedule

    g = sample_direction((model.n_nodes, model.n_features), rng_chain)
    states: list[GraphState] | None = [] if cfg.record_trajectory else None
    rewards: list[float] = []
    evals = 0

    for t in range(schedule.steps - 2, -1, -1):
        g = reverse_step(g, t, model, schedule, rng_chain, cfg.add_ancestral_noise)
        if guided:
            try:
                signal = compute_control(g, t, model, reward, cfg.controller, rng_ctrl)
            except Exception as exc:
                raise SamplingError(f"controller failed at step t={t}: {exc}") from exc
            g = g + _effective_k(cfg, t) * signal.direction
            rewards.append(signal.best_reward)
            evals += signal.reward_evals
        if states is not None:
            states.append(g)

    final = model.denoise(g, 0) if cfg.final_denoise else g
    return Trajectory(
        final=final,
        rewards=np.asarray(rewards),
        reward_evals_total=evals,
        states=states,
        meta={
            "controller": cfg.controller.kind if guided else "none",
            "final_denoise": cfg.final_denoise,
        },
    )


def batch_sample(
    model: ScoreModel,
    reward: Reward | None,
    cfg: SamplerConfig,
    n_chains: int,
    base_seed: int,
) -> BatchResult:
    """Independent chains with per-chain seeds base_seed + chain index.

    A failing chain is recorded in the error log; the batch keeps going.
    """
    if n_chains < 1:
        raise ValueError(f"n_chains must be >= 1, got {n_chains}")
    trajectories: list[Trajectory | None] = []
    errors: dict[int, str] = {}
    total_evals = 0
    for chain in range(n_chains):
        try:
            trajectory = guided_sample(model, reward, cfg, rng=base_seed + chain)
            trajectories.append(trajectory)
            total_evals += trajectory.reward_evals_total
        except SamplingError as exc:
            trajectories.append(None)
            errors[chain] = str(exc)
    return BatchResult(
        trajectories=trajectories, errors=errors, reward_evals_total=total_evals
    )
