"""Control laws steering the reverse diffusion toward high reward.

One gradient-based controller (chain rule through the Tweedie denoiser) and
four zeroth-order controllers built from reward evaluations at randomly
perturbed states:

  one_point    direction = (phi/mu) * r(den(g + mu U)) * U
  two_point    direction = (phi/mu) * [r(den(g + mu U)) - r(den(g))] * U
  best_of_n    direction = the U_i whose denoised perturbation scores highest
  multi_point  direction = (1/(N mu)) * sum_i [r(den(g + mu U_i)) - r(den(g))] U_i

Perturbation directions are standard normal per free coordinate, mirrored
into the symmetric adjacency subspace. The smoothing mu_t either stays
constant or tracks the marginal noise level (mu_t = mu0 * sigma_t), keeping
perturbations commensurate with the state's noise floor. Controllers return
unscaled directions; the sampler applies the guidance scale k at injection.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import RewardEvaluationError, UnsupportedOperationError
from .priors import ScoreModel
from .rewards import Reward
from .state import GraphState, triu_index

logger = logging.getLogger(__name__)

CONTROLLER_KINDS = ("gradient", "one_point", "two_point", "best_of_n", "multi_point")
MU_RULES = ("constant", "sigma")


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "best_of_n"
    k: float = 1.0
    lam: float = 1.0
    mu0: float = 0.1
    mu_rule: str = "sigma"
    n_candidates: int = 8
    phi: float = 1.0

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.mu_rule not in MU_RULES:
            raise ValueError(f"unknown mu_rule {self.mu_rule!r}")
        if self.k < 0:
            raise ValueError("guidance scale k must be >= 0")
        if self.lam <= 0:
            raise ValueError("temperature lambda must be > 0")
        if self.mu0 <= 0:
            raise ValueError("smoothing mu0 must be > 0")
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.phi <= 0:
            raise ValueError("scaling factor phi must be > 0")


@dataclass(frozen=True)
class ControlSignal:
    direction: GraphState
    reward_evals: int
    best_reward: float


def sample_direction(shape: tuple[int, int], rng: np.random.Generator) -> GraphState:
    """Unit-variance draw per free coordinate, mirrored, zero diagonal."""
    n, f = shape
    x = rng.standard_normal((n, f))
    a = np.zeros((n, n))
    iu = triu_index(n)
    a[iu] = rng.standard_normal(len(iu[0]))
    return GraphState._wrap(x, a + a.T)


def smoothing_scale(cfg: ControllerConfig, model: ScoreModel, t: int) -> float:
    if cfg.mu_rule == "sigma":
        return cfg.mu0 * float(model.schedule.marginal_std[t])
    return cfg.mu0


def _eval_reward(reward: Reward, g: GraphState, t: int) -> float:
    value = float(reward.eval(g))
    if not math.isfinite(value):
        raise RewardEvaluationError(
            f"reward {reward.name!r} returned non-finite value at t={t}"
        )
    return value


def gradient_control(
    g: GraphState, t: int, model: ScoreModel, reward: Reward
) -> ControlSignal:
    """Greedy differentiable control: grad of r(denoise(g)) w.r.t. g.

    Returns the raw chain-rule gradient; any g(t)/lambda prefactor is folded
    into the sampler's guidance scale.
    """
    if reward.grad is None:
        raise UnsupportedOperationError(
            f"reward {reward.name!r} has no analytic gradient; "
            "use a zeroth-order controller"
        )
    denoised = model.denoise(g, t)
    reward_value = _eval_reward(reward, denoised, t)
    direction = model.denoiser_vjp(g, t, reward.grad(denoised))
    return ControlSignal(direction=direction, reward_evals=1, best_reward=reward_value)


def zo_one_point(
    g: GraphState,
    t: int,
    model: ScoreModel,
    reward: Reward,
    cfg: ControllerConfig,
    rng: np.random.Generator,
) -> ControlSignal:
    mu = smoothing_scale(cfg, model, t)
    u = sample_direction(g.shape, rng)
    value = _eval_reward(reward, model.denoise(g + mu * u, t), t)
    return ControlSignal(
        direction=(cfg.phi / mu) * value * u, reward_evals=1, best_reward=value
    )


def zo_two_point(
    g: GraphState,
    t: int,
    model: ScoreModel,
    reward: Reward,
    cfg: ControllerConfig,
    rng: np.random.Generator,
) -> ControlSignal:
    mu = smoothing_scale(cfg, model, t)
    u = sample_direction(g.shape, rng)
    base = _eval_reward(reward, model.denoise(g, t), t)
    perturbed = _eval_reward(reward, model.denoise(g + mu * u, t), t)
    return ControlSignal(
        direction=(cfg.phi / mu) * (perturbed - base) * u,
        reward_evals=2,
        best_reward=max(base, perturbed),
    )


def zo_best_of_n(
    g: GraphState,
    t: int,
    model: ScoreModel,
    reward: Reward,
    cfg: ControllerConfig,
    rng: np.random.Generator,
) -> ControlSignal:
    """Pick the direction whose denoised perturbation maximizes the reward.

    Ties break toward the lowest candidate index; non-finite candidate
    rewards are demoted to -inf rather than aborting the batch.
    """
    mu = smoothing_scale(cfg, model, t)
    candidates = [sample_direction(g.shape, rng) for _ in range(cfg.n_candidates)]
    values = np.empty(cfg.n_candidates)
    for i, u in enumerate(candidates):
        value = float(reward.eval(model.denoise(g + mu * u, t)))
        if not math.isfinite(value):
            logger.warning(
                "non-finite reward for candidate %d at t=%d; treating as -inf", i, t
            )
            value = -np.inf
        values[i] = value
    if not np.isfinite(values).any():
        raise RewardEvaluationError(f"all {cfg.n_candidates} candidates non-finite at t={t}")
    best = int(np.argmax(values))
    return ControlSignal(
        direction=candidates[best],
        reward_evals=cfg.n_candidates,
        best_reward=float(values[best]),
    )


def zo_multi_point(
    g: GraphState,
    t: int,
    model: ScoreModel,
    reward: Reward,
    cfg: ControllerConfig,
    rng: np.random.Generator,
) -> ControlSignal:
    """Average the reward differences over all sampled directions.

    Non-finite candidates are dropped from the average (with the divisor
    decremented); the base evaluation must be finite.
    """
    mu = smoothing_scale(cfg, model, t)
    base = _eval_reward(reward, model.denoise(g, t), t)
    direction = GraphState.zeros(*g.shape)
    best = base
    kept = 0
    for i in range(cfg.n_candidates):
        u = sample_direction(g.shape, rng)
        value = float(reward.eval(model.denoise(g + mu * u, t)))
        if not math.isfinite(value):
            logger.warning(
                "non-finite reward for candidate %d at t=%d; dropping it", i, t
            )
            continue
        direction = direction + (value - base) * u
        best = max(best, value)
        kept += 1
    if kept == 0:
        raise RewardEvaluationError(f"all {cfg.n_candidates} candidates non-finite at t={t}")
    return ControlSignal(
        direction=(1.0 / (kept * mu)) * direction,
        reward_evals=cfg.n_candidates + 1,
        best_reward=best,
    )


def compute_control(
    g: GraphState,
    t: int,
    model: ScoreModel,
    reward: Reward,
    cfg: ControllerConfig,
    rng: np.random.Generator,
) -> ControlSignal:
    """Dispatch to the configured controller."""
    if cfg.kind == "gradient":
        return gradient_control(g, t, model, reward)
    if cfg.kind == "one_point":
        return zo_one_point(g, t, model, reward, cfg, rng)
    if cfg.kind == "two_point":
        return zo_two_point(g, t, model, reward, cfg, rng)
    if cfg.kind == "best_of_n":
        return zo_best_of_n(g, t, model, reward, cfg, rng)
    return zo_multi_point(g, t, model, reward, cfg, rng)
