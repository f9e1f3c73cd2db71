"""Experiment-level evaluation of generated graph sets.

Distributional distance is a squared MMD between per-graph statistic
histograms (degree or clustering coefficient) under a Gaussian
total-variation kernel, k(x, y) = exp(-TV(x, y)^2 / (2 sigma_k^2)). The
V-statistic form is used so identical sets give exactly zero and the value
is never negative. Uniqueness uses Weisfeiler-Lehman color refinement (3
rounds), which is isomorphism-approximate but permutation-invariant.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedMetricError
from .rewards import (
    ConstraintSpec,
    ObservationMask,
    edge_count,
    effective_mask,
    is_star,
    max_degree,
    triangle_count,
    fairness_metrics,
)
from .state import GraphState

MMD_KERNEL_SIGMA = 1.0
CLUSTERING_BINS = 10
WL_ROUNDS = 3


@dataclass(frozen=True)
class EvalReport:
    val_c: float | None = None
    delta_mmd: float | None = None
    delta_mmd_by_stat: dict = field(default_factory=dict)
    accuracy: float | None = None
    pct_unique: float | None = None
    fairness_summary: dict | None = None
    aux_counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "val_c": self.val_c,
            "delta_mmd": self.delta_mmd,
            "delta_mmd_by_stat": dict(self.delta_mmd_by_stat),
            "accuracy": self.accuracy,
            "pct_unique": self.pct_unique,
            "fairness_summary": self.fairness_summary,
            "aux_counts": dict(self.aux_counts),
        }


def _adjacency(g) -> np.ndarray:
    return g.adjacency if isinstance(g, GraphState) else np.asarray(g, dtype=float)


# -- constraint validity --------------------------------------------------------


def val_c(samples: list, spec: ConstraintSpec) -> float:
    """Fraction of samples whose hard statistic satisfies the constraint."""
    if not samples:
        raise ValueError("samples must be nonempty")
    hard_stats = {
        "edge_count": edge_count,
        "triangle_count": triangle_count,
        "max_degree": max_degree,
    }
    hits = 0
    for g in samples:
        a = _adjacency(g)
        if spec.kind in hard_stats:
            ok = hard_stats[spec.kind](a) <= spec.bound
        elif spec.kind == "force_star":
            ok = is_star(a)
        elif spec.kind == "fairness":
            delta_dp, _ = fairness_metrics(a, spec.aux)
            ok = delta_dp <= spec.bound
        else:  # link_observation: every observed entry must match
            mask = effective_mask(spec.aux, spec.mode)
            ok = bool((a[mask] == spec.aux.values[mask]).all())
        hits += bool(ok)
    return hits / len(samples)


# -- MMD ------------------------------------------------------------------------


def degree_histogram(a: np.ndarray, support: int) -> np.ndarray:
    deg = a.sum(axis=1).astype(int)
    hist = np.bincount(deg, minlength=support + 1).astype(float)
    return hist / hist.sum()


def clustering_coefficients(a: np.ndarray) -> np.ndarray:
    deg = a.sum(axis=1)
    triangles = np.diagonal(a @ a @ a) / 2.0
    denom = deg * (deg - 1) / 2.0
    return np.divide(triangles, denom, out=np.zeros_like(deg), where=denom > 0)


def clustering_histogram(a: np.ndarray, bins: int = CLUSTERING_BINS) -> np.ndarray:
    coeffs = clustering_coefficients(a)
    hist, _ = np.histogram(coeffs, bins=bins, range=(0.0, 1.0 + 1e-9))
    return hist.astype(float) / len(coeffs)


def _stat_histograms(graphs: list, stat: str) -> np.ndarray:
    adjs = [_adjacency(g) for g in graphs]
    if stat == "degree":
        support = int(max(a.sum(axis=1).max() for a in adjs))
        return np.stack([degree_histogram(a, support) for a in adjs])
    if stat == "clustering":
        return np.stack([clustering_histogram(a) for a in adjs])
    raise ValueError(f"unknown MMD statistic {stat!r}")


def _tv_kernel_mean(h_a: np.ndarray, h_b: np.ndarray) -> float:
    # TV between histograms on a shared support: 0.5 * sum |p - q|.
    tv = 0.5 * np.abs(h_a[:, None, :] - h_b[None, :, :]).sum(axis=2)
    return float(np.exp(-(tv**2) / (2.0 * MMD_KERNEL_SIGMA**2)).mean())


def mmd(set_a: list, set_b: list, stat: str = "degree") -> float:
    """Squared MMD (V-statistic) between per-graph statistic histograms."""
    if not set_a or not set_b:
        raise ValueError("both graph sets must be nonempty")
    hists = _stat_histograms(list(set_a) + list(set_b), stat)
    h_a, h_b = hists[: len(set_a)], hists[len(set_a) :]
    value = (
        _tv_kernel_mean(h_a, h_a)
        + _tv_kernel_mean(h_b, h_b)
        - 2.0 * _tv_kernel_mean(h_a, h_b)
    )
    return max(value, 0.0)


def delta_mmd(reference: list, unconstrained: list, constrained: list, stat: str) -> float:
    """mmd(reference, unconstrained) - mmd(reference, constrained); positive
    means the constrained set sits closer to the reference distribution."""
    return mmd(reference, unconstrained, stat) - mmd(reference, constrained, stat)


# -- link-prediction accuracy ----------------------------------------------------


def observation_accuracy(samples: list, obs: ObservationMask, mode: str = "all_entries") -> float:
    """Mean fraction of observed positions reproduced by the samples."""
    if not samples:
        raise ValueError("samples must be nonempty")
    mask = effective_mask(obs, mode)
    if not mask.any():
        raise UndefinedMetricError("observation mask is empty")
    fractions = [
        float((_adjacency(g)[mask] == obs.values[mask]).mean()) for g in samples
    ]
    return float(np.mean(fractions))


# -- uniqueness -------------------------------------------------------------------


def wl_graph_hash(a: np.ndarray, rounds: int = WL_ROUNDS) -> str:
    """Weisfeiler-Lehman color-refinement digest; permutation-invariant."""
    a = _adjacency(a)
    n = a.shape[0]
    neighbors = [np.flatnonzero(a[i]) for i in range(n)]
    colors = [str(int(d)) for d in a.sum(axis=1)]
    for _ in range(rounds):
        colors = [
            hashlib.sha256(
                (colors[i] + "|" + ",".join(sorted(colors[j] for j in neighbors[i]))).encode()
            ).hexdigest()[:16]
            for i in range(n)
        ]
    digest = hashlib.sha256((f"{n};" + ",".join(sorted(colors))).encode())
    return digest.hexdigest()


def pct_unique(samples: list, reference: list) -> float:
    """Fraction of samples whose WL hash is absent from the reference set."""
    if not samples:
        raise ValueError("samples must be nonempty")
    seen = {wl_graph_hash(_adjacency(g)) for g in reference}
    novel = sum(wl_graph_hash(_adjacency(g)) not in seen for g in samples)
    return novel / len(samples)
