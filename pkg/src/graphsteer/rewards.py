"""Rewards, constraints, and validity predicates over graphs.

Count statistics follow the doubled conventions of the constraint table they
come from: edge count is 1'A1 (each undirected edge twice), triangle count is
tr(A^3) (each triangle six times), max degree is the largest row sum. Bounds
are therefore directly comparable with those conventions.

Analytic gradients are symmetric zero-diagonal matrices pairing with
perturbations through the full Frobenius inner product; every differentiable
reward here passes a central finite-difference check.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import (
    ConfigurationError,
    DegenerateConstraintWarning,
    UndefinedMetricError,
    UnsupportedOperationError,
)
from .state import GraphState, symmetrize
from .validation import check_attributes, check_binary_adjacency

CONSTRAINT_KINDS = (
    "edge_count",
    "triangle_count",
    "max_degree",
    "force_star",
    "fairness",
    "link_observation",
)
LOSS_VARIANTS = ("l2", "hinge", "quantized_l2", "quantized_hinge")
DEGREE_TEMPERATURE = 10.0
SBM_VALIDITY_FACTOR = 8.0


@dataclass(frozen=True)
class Reward:
    """Scalar objective over clean graphs, with optional analytic gradient."""

    name: str
    eval: Callable[[GraphState], float]
    grad: Callable[[GraphState], GraphState] | None = None


@dataclass(frozen=True)
class SensitiveAttributes:
    z: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z)
        if not np.isin(z, (0, 1)).all():
            raise ValueError("sensitive attributes must be 0/1")
        if (z == 0).sum() == 0 or (z == 1).sum() == 0:
            raise UndefinedMetricError("both attribute groups must be nonempty")
        object.__setattr__(self, "z", z.astype(int))


@dataclass(frozen=True)
class ObservationMask:
    """Observed adjacency positions and their 0/1 values."""

    mask: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        values = np.asarray(self.values, dtype=float)
        if mask.shape != values.shape or mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
            raise ValueError("mask and values must be square matrices of equal shape")
        if not np.array_equal(mask, mask.T) or not np.array_equal(values, values.T):
            raise ValueError("mask and values must be symmetric")
        if mask.diagonal().any():
            raise ValueError("mask diagonal must be False")
        if not np.isin(values[mask], (0.0, 1.0)).all():
            raise ValueError("observed values must be 0/1")
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "values", np.where(mask, values, 0.0))


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str
    bound: float = 0.0
    loss_variant: str = "l2"
    mode: str = "all_entries"  # link_observation only
    aux: object = None

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ConfigurationError(f"unknown constraint kind {self.kind!r}")
        if self.loss_variant not in LOSS_VARIANTS:
            raise ConfigurationError(f"unknown loss variant {self.loss_variant!r}")
        if self.kind in ("edge_count", "triangle_count", "max_degree") and self.bound < 0:
            raise ConfigurationError("count-constraint bound must be >= 0")
        if self.kind == "fairness" and not isinstance(self.aux, SensitiveAttributes):
            raise ConfigurationError("fairness constraint needs SensitiveAttributes aux")
        if self.kind == "link_observation" and not isinstance(self.aux, ObservationMask):
            raise ConfigurationError("link_observation constraint needs ObservationMask aux")


# -- count statistics ---------------------------------------------------------


def edge_count(a: np.ndarray) -> float:
    """1'A1: every undirected edge contributes twice."""
    return float(np.asarray(a).sum())


def triangle_count(a: np.ndarray) -> float:
    """tr(A^3): every triangle contributes six times."""
    a = np.asarray(a)
    return float(np.trace(a @ a @ a))


def max_degree(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.shape[0] == 0:
        return 0.0
    return float(a.sum(axis=1).max())


def soft_max_degree(a: np.ndarray, tau: float = DEGREE_TEMPERATURE) -> float:
    """Log-sum-exp upper bound on the max row sum; smooth surrogate."""
    return float(logsumexp(tau * np.asarray(a).sum(axis=1)) / tau)


def _edge_count_grad(a: np.ndarray) -> np.ndarray:
    g = np.ones_like(a)
    np.fill_diagonal(g, 0.0)
    return g


def _triangle_count_grad(a: np.ndarray) -> np.ndarray:
    return symmetrize(3.0 * (a @ a))


def _soft_max_degree_grad(a: np.ndarray, tau: float = DEGREE_TEMPERATURE) -> np.ndarray:
    # entrywise gradient is the row-constant matrix s_p; symmetrizing gives
    # (s_p + s_q) / 2 with a zero diagonal
    s = softmax(tau * a.sum(axis=1))
    out = 0.5 * np.add.outer(s, s)
    np.fill_diagonal(out, 0.0)
    return out


# -- quantization -------------------------------------------------------------


def quantize(a: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Entrywise 1(a > threshold); strict at the threshold."""
    out = (np.asarray(a) > threshold).astype(float)
    np.fill_diagonal(out, 0.0)
    return out


# -- constraint rewards -------------------------------------------------------

_STATS = {
    "edge_count": (edge_count, _edge_count_grad),
    "triangle_count": (triangle_count, _triangle_count_grad),
    "max_degree": (max_degree, None),  # hard max: quantized variants only
}


def _count_constraint_reward(spec: ConstraintSpec) -> Reward:
    bound = float(spec.bound)
    quantized = spec.loss_variant.startswith("quantized")
    hinge = spec.loss_variant.endswith("hinge")
    name = f"{spec.kind}_{spec.loss_variant}"

    if spec.kind == "max_degree" and not quantized:
        stat_fn, grad_fn = soft_max_degree, _soft_max_degree_grad
    else:
        stat_fn, grad_fn = _STATS[spec.kind]

    def eval_fn(g: GraphState) -> float:
        a = quantize(g.adjacency) if quantized else g.adjacency
        excess = stat_fn(a) - bound
        if hinge:
            return -max(excess, 0.0)
        return -(excess**2)

    if quantized:
        return Reward(name=name, eval=eval_fn)

    def grad_eval(g: GraphState) -> GraphState:
        a = g.adjacency
        excess = stat_fn(a) - bound
        coeff = -(1.0 if excess > 0 else 0.0) if hinge else -2.0 * excess
        return GraphState(
            np.zeros_like(g.node_features), coeff * grad_fn(a)
        )

    return Reward(name=name, eval=eval_fn, grad=grad_eval)


def constraint_reward(spec: ConstraintSpec) -> Reward:
    """Reward whose eval is the negated constraint loss."""
    if spec.kind in _STATS:
        return _count_constraint_reward(spec)
    if spec.kind == "force_star":
        return star_reward()
    if spec.kind == "fairness":
        return fairness_reward(
            spec.aux, quantized=spec.loss_variant.startswith("quantized")
        )
    return link_observation_reward(
        spec.aux, mode=spec.mode, exact=spec.loss_variant.startswith("quantized")
    )


def star_reward() -> Reward:
    """Negated star defect of the quantized graph.

    Defect = edges not incident to the highest-degree node plus that node's
    missing spokes; zero exactly on stars (single-node graphs included).
    """

    def eval_fn(g: GraphState) -> float:
        a = quantize(g.adjacency)
        n = a.shape[0]
        if n == 1:
            return 0.0
        deg = a.sum(axis=1)
        hub = int(np.argmax(deg))
        off_hub_edges = a.sum() / 2.0 - deg[hub]
        missing_spokes = (n - 1) - deg[hub]
        return -float(off_hub_edges + missing_spokes)

    return Reward(name="force_star", eval=eval_fn)


# -- fairness -----------------------------------------------------------------


def _pair_masks(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, float, float]:
    same = np.equal.outer(z, z)
    np.fill_diagonal(same, False)
    cross = np.not_equal.outer(z, z)
    n_same_pairs = same.sum() / 2.0
    n_cross_pairs = cross.sum() / 2.0
    if n_same_pairs == 0:
        raise UndefinedMetricError("no same-group pairs; groups too small")
    return same, cross, n_same_pairs, n_cross_pairs


def group_densities(a: np.ndarray, z: np.ndarray) -> tuple[float, float]:
    """(same-group edge density, cross-group edge density)."""
    same, cross, n_same, n_cross = _pair_masks(z)
    return float(a[same].sum() / (2.0 * n_same)), float(a[cross].sum() / (2.0 * n_cross))


def fairness_metrics(a: np.ndarray, attrs: SensitiveAttributes) -> tuple[float, float]:
    """Dyadic parity gaps (global, per-node mean) of a quantized graph."""
    a = check_binary_adjacency(a)
    z = check_attributes(attrs.z, a.shape[0])
    rho_same, rho_cross = group_densities(a, z)
    delta_dp = abs(rho_same - rho_cross)

    group_sizes = np.array([(z == 0).sum(), (z == 1).sum()])
    same_edges = np.where(np.equal.outer(z, z), a, 0.0).sum(axis=1)
    cross_edges = np.where(np.not_equal.outer(z, z), a, 0.0).sum(axis=1)
    same_peers = group_sizes[z] - 1
    cross_peers = group_sizes[1 - z]
    same_density = np.divide(
        same_edges, same_peers, out=np.zeros_like(same_edges), where=same_peers > 0
    )
    cross_density = cross_edges / cross_peers
    delta_dp_node = float(np.abs(same_density - cross_density).mean())
    return delta_dp, delta_dp_node


def fairness_reward(attrs: SensitiveAttributes, quantized: bool = False) -> Reward:
    """Negated squared density gap; differentiable on the continuous graph."""
    z = attrs.z
    name = "fairness_quantized" if quantized else "fairness"

    def gap(a: np.ndarray) -> float:
        rho_same, rho_cross = group_densities(a, z)
        return rho_same - rho_cross

    def eval_fn(g: GraphState) -> float:
        a = quantize(g.adjacency) if quantized else g.adjacency
        return -(gap(a) ** 2)

    if quantized:
        return Reward(name=name, eval=eval_fn)

    def grad_fn(g: GraphState) -> GraphState:
        same, cross, n_same, n_cross = _pair_masks(z)
        coeff = -2.0 * gap(g.adjacency)
        grad_a = coeff * (same / (2.0 * n_same) - cross / (2.0 * n_cross))
        np.fill_diagonal(grad_a, 0.0)
        return GraphState(np.zeros_like(g.node_features), grad_a)

    return Reward(name=name, eval=eval_fn, grad=grad_fn)


# -- link observation ---------------------------------------------------------


def effective_mask(obs: ObservationMask, mode: str) -> np.ndarray:
    if mode not in ("all_entries", "edges_only"):
        raise ConfigurationError(f"unknown observation mode {mode!r}")
    if mode == "edges_only":
        return obs.mask & (obs.values == 1.0)
    return obs.mask


def link_observation_reward(
    obs: ObservationMask, mode: str = "all_entries", exact: bool = False
) -> Reward:
    """Consistency with observed entries: negated squared error, or (exact
    variant) the matched fraction of the quantized graph."""
    mask = effective_mask(obs, mode)
    values = obs.values
    name = f"link_{mode}" + ("_exact" if exact else "")
    if not mask.any():
        warnings.warn(
            "observation mask is empty; reward is constant zero",
            DegenerateConstraintWarning,
            stacklevel=2,
        )

    if exact:

        def exact_eval(g: GraphState) -> float:
            if not mask.any():
                return 0.0
            q = quantize(g.adjacency)
            return float((q[mask] == values[mask]).mean())

        return Reward(name=name, eval=exact_eval)

    def eval_fn(g: GraphState) -> float:
        diff = (g.adjacency - values) * mask
        return -float((diff**2).sum())

    def grad_fn(g: GraphState) -> GraphState:
        grad_a = -2.0 * (g.adjacency - values) * mask
        return GraphState(np.zeros_like(g.node_features), grad_a)

    return Reward(name=name, eval=eval_fn, grad=grad_fn)


def random_observation(
    a: np.ndarray, fraction: float, rng: np.random.Generator, edges_only: bool = False
) -> ObservationMask:
    """Observe a random fraction of entry pairs, or of existing edges."""
    a = check_binary_adjacency(a)
    n = a.shape[0]
    iu = np.triu_indices(n, k=1)
    if edges_only:
        eligible = a[iu] == 1.0
    else:
        eligible = np.ones(len(iu[0]), dtype=bool)
    chosen = eligible & (rng.random(len(iu[0])) < fraction)
    mask = np.zeros((n, n), dtype=bool)
    mask[iu] = chosen
    mask = mask | mask.T
    return ObservationMask(mask=mask, values=np.where(mask, a, 0.0))


# -- validity predicates ------------------------------------------------------


@dataclass(frozen=True)
class ValidityReport:
    is_star: bool
    is_valid_egonet: bool
    sbm_valid: bool | None = None


def is_star(a: np.ndarray) -> bool:
    """Single node, or all n-1 edges sharing one endpoint."""
    a = check_binary_adjacency(a)
    n = a.shape[0]
    if n == 1:
        return True
    deg = a.sum(axis=1)
    return bool(deg.max() == n - 1 and a.sum() / 2.0 == n - 1)


def is_valid_egonet(a: np.ndarray) -> bool:
    """Some node is adjacent to all others; single-node graphs count."""
    a = check_binary_adjacency(a)
    n = a.shape[0]
    return n == 1 or bool((a.sum(axis=1) == n - 1).any())


def sbm_valid(a: np.ndarray, attrs: SensitiveAttributes | None) -> bool:
    """Intra-community density at least 8x the inter-community density."""
    if attrs is None:
        raise ValueError("sbm_valid requires community labels")
    a = check_binary_adjacency(a)
    z = check_attributes(attrs.z, a.shape[0])
    rho_intra, rho_inter = group_densities(a, z)
    return bool(rho_intra >= SBM_VALIDITY_FACTOR * rho_inter)


def validity_checks(a: np.ndarray, attrs: SensitiveAttributes | None = None) -> ValidityReport:
    return ValidityReport(
        is_star=is_star(a),
        is_valid_egonet=is_valid_egonet(a),
        sbm_valid=None if attrs is None else sbm_valid(a, attrs),
    )


def require_grad(reward: Reward) -> Callable[[GraphState], GraphState]:
    if reward.grad is None:
        raise UnsupportedOperationError(
            f"reward {reward.name!r} has no analytic gradient"
        )
    return reward.grad
