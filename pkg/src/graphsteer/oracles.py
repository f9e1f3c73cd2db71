"""Independent oracles backing the test and acceptance suites.

Nothing here reuses the analytic code paths it checks: gradients come from
central finite differences over the free coordinates, estimator statistics
from plain Monte-Carlo over controller invocations, and the Gaussian
posterior from the closed-form precision-weighted fusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import NumericalDomainError
from .guidance import ControllerConfig, compute_control, gradient_control
from .priors import GaussianPrior, ScoreModel
from .rewards import Reward
from .state import GraphState

RICHARDSON_SCALE = 1e3


def finite_diff_grad(
    f: Callable[[GraphState], float], g: GraphState, h: float = 1e-5
) -> GraphState:
    """Central-difference gradient over the free coordinates, mirrored back.

    An off-diagonal pair is perturbed through both mirrored entries, so the
    per-pair derivative is halved before being placed at each entry; that
    makes the result pair with perturbations through the full Frobenius
    inner product, matching the package's analytic gradients. Large-scale
    functions (|f| > 1e3) get one Richardson extrapolation pass.
    """
    base = f(g)
    if not math.isfinite(base):
        raise NumericalDomainError("function is non-finite at the base point")
    n, n_feat = g.n_nodes, g.n_features
    vec = g.to_free_vector()
    d = vec.size

    def central(step: float) -> np.ndarray:
        out = np.empty(d)
        for i in range(d):
            plus, minus = vec.copy(), vec.copy()
            plus[i] += step
            minus[i] -= step
            f_plus = f(GraphState.from_free_vector(plus, n, n_feat))
            f_minus = f(GraphState.from_free_vector(minus, n, n_feat))
            if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                raise NumericalDomainError(
                    f"function non-finite near free coordinate {i}"
                )
            out[i] = (f_plus - f_minus) / (2.0 * step)
        return out

    grad = central(h)
    if abs(base) > RICHARDSON_SCALE:
        grad = (4.0 * central(h / 2.0) - grad) / 3.0
    grad[n * n_feat :] /= 2.0  # pair derivative split across mirrored entries
    return GraphState.from_free_vector(grad, n, n_feat)


@dataclass(frozen=True)
class EstimatorStats:
    mean_direction: GraphState
    cosine_to_reference: float
    empirical_variance: float
    n_samples: int


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v / (nu * nv))


def estimator_stats(
    kind: str,
    reward: Reward,
    model: ScoreModel,
    g: GraphState,
    t: int,
    cfg: ControllerConfig,
    n_samples: int,
    seed: int,
    reference: GraphState,
) -> EstimatorStats:
    """Monte-Carlo mean/variance of a controller's direction.

    Runs the controller n_samples times on independent child streams of a
    single seed sequence, accumulating in fixed order so the result does not
    depend on any parallel schedule.
    """
    if n_samples < 100:
        raise ValueError("need at least 100 samples for stable statistics")
    cfg = replace(cfg, kind=kind)
    children = np.random.SeedSequence(seed).spawn(n_samples)
    d = g.dim_free
    total = np.zeros(d)
    total_sq = np.zeros(d)
    for child in children:
        rng = np.random.default_rng(child)
        direction = compute_control(g, t, model, reward, cfg, rng).direction
        vec = direction.to_free_vector()
        total += vec
        total_sq += vec**2
    mean = total / n_samples
    per_coord_var = (total_sq / n_samples - mean**2) * n_samples / (n_samples - 1)
    return EstimatorStats(
        mean_direction=GraphState.from_free_vector(mean, g.n_nodes, g.n_features),
        cosine_to_reference=cosine(mean, reference.to_free_vector()),
        empirical_variance=float(per_coord_var.mean()),
        n_samples=n_samples,
    )


def gaussian_posterior(
    prior: GaussianPrior, y: GraphState, gamma: float
) -> tuple[GraphState, float]:
    """Exact posterior of the clean state under likelihood exp(-|G - y|^2 / (2 gamma)).

    mean = (s^2 y + gamma m) / (s^2 + gamma), var = s^2 gamma / (s^2 + gamma)
    per coordinate.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    s2 = prior.std**2
    mean = (1.0 / (s2 + gamma)) * (s2 * y + gamma * prior.mean)
    return mean, s2 * gamma / (s2 + gamma)


# -- named check suites (shared by the CLI and the acceptance tests) -----------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rel_err(candidate: GraphState, reference: GraphState) -> float:
    diff = candidate.to_free_vector() - reference.to_free_vector()
    scale = np.linalg.norm(reference.to_free_vector())
    if scale == 0.0:
        return float(np.linalg.norm(diff))
    return float(np.linalg.norm(diff) / scale)


def _random_state(rng: np.random.Generator, n: int, f: int, scale: float = 0.8) -> GraphState:
    x = scale * rng.standard_normal((n, f))
    a = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    a[iu] = scale * rng.standard_normal(len(iu[0]))
    return GraphState(x, a + a.T)


def check_gradients(seed: int = 0, n_points: int = 20, tol: float = 1e-4) -> list[CheckResult]:
    """Analytic gradients (rewards and the denoiser chain) vs finite differences."""
    from .rewards import (
        ConstraintSpec,
        SensitiveAttributes,
        ObservationMask,
        constraint_reward,
        fairness_reward,
        link_observation_reward,
    )
    from .schedule import build_schedule
    from .priors import EmpiricalMixturePrior

    rng = np.random.default_rng(seed)
    n, f = 6, 2
    z = SensitiveAttributes(np.array([0, 0, 0, 1, 1, 1]))
    mask = np.zeros((n, n), dtype=bool)
    mask[0, 1] = mask[1, 0] = mask[2, 4] = mask[4, 2] = True
    values = np.zeros((n, n))
    values[0, 1] = values[1, 0] = 1.0
    obs = ObservationMask(mask=mask, values=values)

    rewards = [
        constraint_reward(ConstraintSpec(kind="edge_count", bound=6.0, loss_variant="l2")),
        constraint_reward(ConstraintSpec(kind="edge_count", bound=2.0, loss_variant="hinge")),
        constraint_reward(ConstraintSpec(kind="triangle_count", bound=6.0, loss_variant="l2")),
        constraint_reward(ConstraintSpec(kind="max_degree", bound=3.0, loss_variant="l2")),
        fairness_reward(z),
        link_observation_reward(obs),
    ]

    results = []
    for reward in rewards:
        worst = 0.0
        for _ in range(n_points):
            g = _random_state(rng, n, f)
            worst = max(worst, _rel_err(reward.grad(g), finite_diff_grad(reward.eval, g)))
        results.append(
            CheckResult(
                name=f"grad[{reward.name}]",
                passed=worst <= tol,
                detail=f"max rel err {worst:.3e} (tol {tol:g})",
            )
        )

    # Chain rule through the denoiser, on both priors. Mixture atoms are kept
    # clustered and the steps late so the posterior over atoms stays mixed;
    # far-apart atoms at low noise make the denoiser Jacobian vanish and the
    # relative-error comparison degenerate.
    schedule = build_schedule(40, 5e-3, 0.08)
    target = _random_state(rng, n, f)
    quad = Reward(
        name="quadratic",
        eval=lambda s: -0.5 * float(
            ((s.to_full_vector() - target.to_full_vector()) ** 2).sum()
        ),
        grad=lambda s: -1.0 * (s - target),
    )
    cases = {
        "gaussian": (GaussianPrior(schedule, n, f, std=1.0), 0.8, 1),
        "mixture": (
            EmpiricalMixturePrior(
                schedule, [_random_state(rng, n, f, scale=0.15) for _ in range(3)]
            ),
            0.2,
            schedule.steps // 2,
        ),
    }
    for label, (model, state_scale, t_min) in cases.items():
        worst = 0.0
        for _ in range(n_points):
            g = _random_state(rng, n, f, scale=state_scale)
            t = int(rng.integers(t_min, schedule.steps - 1))
            chain = gradient_control(g, t, model, quad).direction
            fd = finite_diff_grad(lambda s: quad.eval(model.denoise(s, t)), g)
            worst = max(worst, _rel_err(chain, fd))
        results.append(
            CheckResult(
                name=f"grad[denoiser_chain_{label}]",
                passed=worst <= tol,
                detail=f"max rel err {worst:.3e} (tol {tol:g})",
            )
        )
    return results


def _estimator_setup(seed: int = 7):
    """Shared fixture: d = 36 state (8 nodes, 1 feature), quadratic
    adjacency-only reward on the denoised graph, analytic reference."""
    from .schedule import build_schedule

    rng = np.random.default_rng(seed)
    n, f = 8, 1
    schedule = build_schedule(50, 1e-3, 0.05)
    model = GaussianPrior(schedule, n, f, std=1.0)
    target = _random_state(rng, n, f)

    def eval_fn(s: GraphState) -> float:
        diff = s.adjacency - target.adjacency
        return -0.5 * float((diff**2).sum())

    def grad_fn(s: GraphState) -> GraphState:
        return GraphState(np.zeros_like(s.node_features), -(s.adjacency - target.adjacency))

    reward = Reward(name="adjacency_quadratic", eval=eval_fn, grad=grad_fn)
    g = _random_state(rng, n, f)
    t = schedule.steps // 2
    reference = finite_diff_grad(lambda s: reward.eval(model.denoise(s, t)), g)
    return model, reward, g, t, reference


def check_estimators(seed: int = 7) -> list[CheckResult]:
    """Mean convergence, variance ordering, and best-of-N monotonicity."""
    model, reward, g, t, reference = _estimator_setup(seed)
    base_cfg = ControllerConfig(kind="two_point", mu_rule="constant", mu0=1e-2)
    results = []

    # Mean direction of two-point / multi-point vs the analytic gradient.
    for kind, n_samples in (("two_point", 100_000), ("multi_point", 100_000)):
        stats = estimator_stats(
            kind, reward, model, g, t,
            replace(base_cfg, n_candidates=4), n_samples, seed + 1, reference,
        )
        results.append(
            CheckResult(
                name=f"mean_cosine[{kind}]",
                passed=stats.cosine_to_reference >= 0.99,
                detail=f"cosine {stats.cosine_to_reference:.5f} (need >= 0.99)",
            )
        )

    # Variance ordering: one-point > two-point >= multi(4) > multi(16),
    # with multi(16) at most an eighth of two-point.
    n_var = 10_000
    variances = {}
    for kind, n_cand in (
        ("one_point", 1),
        ("two_point", 1),
        ("multi_point", 4),
        ("multi_point_16", 16),
    ):
        stats = estimator_stats(
            kind.removesuffix("_16"), reward, model, g, t,
            replace(base_cfg, n_candidates=n_cand), n_var, seed + 2, reference,
        )
        variances[kind] = stats.empirical_variance
    ordering_ok = (
        variances["one_point"] > variances["two_point"]
        and variances["two_point"] >= variances["multi_point"]
        and variances["multi_point"] > variances["multi_point_16"]
    )
    ratio_ok = variances["multi_point_16"] <= variances["two_point"] / 8.0
    results.append(
        CheckResult(
            name="variance_ordering",
            passed=bool(ordering_ok and ratio_ok),
            detail=(
                "var one={one_point:.3e} two={two_point:.3e} "
                "multi4={multi_point:.3e} multi16={multi_point_16:.3e}".format(**variances)
            ),
        )
    )

    # Best-of-N: mean cosine of the chosen direction grows with N.
    mean_cos = []
    for i, n_cand in enumerate((2, 8, 32)):
        cfg = replace(base_cfg, kind="best_of_n", n_candidates=n_cand)
        children = np.random.SeedSequence(seed + 3 + i).spawn(1000)
        cos_sum = 0.0
        ref_vec = reference.to_free_vector()
        for child in children:
            rng = np.random.default_rng(child)
            direction = compute_control(g, t, model, reward, cfg, rng).direction
            cos_sum += cosine(direction.to_free_vector(), ref_vec)
        mean_cos.append(cos_sum / 1000.0)
    results.append(
        CheckResult(
            name="best_of_n_monotone",
            passed=mean_cos[0] < mean_cos[1] < mean_cos[2],
            detail="mean cosine over N in (2, 8, 32): "
            + ", ".join(f"{c:.4f}" for c in mean_cos),
        )
    )
    return results


def check_posterior(seed: int = 3) -> list[CheckResult]:
    """Closed-form fusion identities of the Gaussian posterior."""
    from .schedule import build_schedule

    rng = np.random.default_rng(seed)
    n, f = 4, 2
    schedule = build_schedule(10, 1e-3, 0.02)
    mean = _random_state(rng, n, f)
    prior = GaussianPrior(schedule, n, f, mean=mean, std=1.0)
    y = _random_state(rng, n, f)

    results = []
    post_mean, _ = gaussian_posterior(prior, y, 1e12)
    err = np.linalg.norm(post_mean.to_free_vector() - mean.to_free_vector())
    results.append(
        CheckResult("posterior_uninformative_limit", err < 1e-6, f"|mean - prior mean| = {err:.2e}")
    )
    post_mean, _ = gaussian_posterior(prior, y, 1e-12)
    err = np.linalg.norm(post_mean.to_free_vector() - y.to_free_vector())
    results.append(
        CheckResult("posterior_hard_constraint_limit", err < 1e-6, f"|mean - y| = {err:.2e}")
    )
    zero_prior = GaussianPrior(schedule, n, f, std=1.0)
    post_mean, post_var = gaussian_posterior(zero_prior, y, 1.0)
    err = np.linalg.norm(post_mean.to_free_vector() - 0.5 * y.to_free_vector())
    results.append(
        CheckResult(
            "posterior_equal_precision",
            err < 1e-12 and abs(post_var - 0.5) < 1e-12,
            f"|mean - y/2| = {err:.2e}, var = {post_var}",
        )
    )
    return results


ORACLE_SUITES = {
    "gradients": check_gradients,
    "estimators": check_estimators,
    "posterior": check_posterior,
}


def run_suite(name: str) -> list[CheckResult]:
    if name not in ORACLE_SUITES:
        raise ValueError(f"unknown oracle suite {name!r}; options: {sorted(ORACLE_SUITES)}")
    return ORACLE_SUITES[name]()
