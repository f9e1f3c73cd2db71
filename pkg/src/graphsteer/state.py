"""Graph diffusion state: node features paired with a symmetric adjacency.

All arrays are float64. The adjacency block is kept exactly symmetric with a
zero diagonal; every operation in this package maps such states to such
states, so symmetry never has to be repaired downstream.

Gradient-like quantities (scores, reward gradients, control directions) are
represented as states of the same shape, paired with perturbations through the
plain Frobenius inner product over both blocks (off-diagonal adjacency pairs
therefore contribute twice, once per mirrored entry).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Project a square matrix onto the symmetric, zero-diagonal subspace."""
    a = np.asarray(a, dtype=float)
    out = 0.5 * (a + a.T)
    np.fill_diagonal(out, 0.0)
    return out


_TRIU_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def triu_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cached strict-upper-triangle indices (hot in the sampling loop)."""
    if n not in _TRIU_CACHE:
        _TRIU_CACHE[n] = np.triu_indices(n, k=1)
    return _TRIU_CACHE[n]


@dataclass(frozen=True)
class GraphState:
    """Node-feature matrix (N x F) plus weighted adjacency (N x N)."""

    node_features: np.ndarray
    adjacency: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.node_features, dtype=float)
        a = np.asarray(self.adjacency, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"node_features must be 2-D, got shape {x.shape}")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if a.shape[0] != x.shape[0]:
            raise ValueError(
                f"node count mismatch: features have {x.shape[0]} rows, "
                f"adjacency is {a.shape[0]}x{a.shape[1]}"
            )
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be exactly symmetric")
        if np.any(np.diagonal(a) != 0.0):
            raise ValueError("adjacency diagonal must be zero")
        object.__setattr__(self, "node_features", x)
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def _wrap(cls, node_features: np.ndarray, adjacency: np.ndarray) -> "GraphState":
        # Trusted constructor for internal arithmetic whose results are
        # symmetric by construction; skips __post_init__ validation.
        out = object.__new__(cls)
        object.__setattr__(out, "node_features", node_features)
        object.__setattr__(out, "adjacency", adjacency)
        return out

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_features(self) -> int:
        return self.node_features.shape[1]

    @property
    def dim_free(self) -> int:
        """Free coordinates after the symmetry / zero-diagonal reduction."""
        n = self.n_nodes
        return n * self.n_features + n * (n - 1) // 2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_nodes, self.n_features)

    @classmethod
    def zeros(cls, n_nodes: int, n_features: int) -> "GraphState":
        return cls(np.zeros((n_nodes, n_features)), np.zeros((n_nodes, n_nodes)))

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray, n_features: int = 0) -> "GraphState":
        adjacency = np.asarray(adjacency, dtype=float)
        return cls(np.zeros((adjacency.shape[0], n_features)), adjacency)

    # -- arithmetic (entrywise on both blocks; preserves exact symmetry) -----

    def __add__(self, other: "GraphState") -> "GraphState":
        return GraphState._wrap(
            self.node_features + other.node_features,
            self.adjacency + other.adjacency,
        )

    def __sub__(self, other: "GraphState") -> "GraphState":
        return GraphState._wrap(
            self.node_features - other.node_features,
            self.adjacency - other.adjacency,
        )

    def __mul__(self, scalar: float) -> "GraphState":
        return GraphState._wrap(self.node_features * scalar, self.adjacency * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "GraphState":
        return self * -1.0

    # -- flattening ----------------------------------------------------------

    def to_full_vector(self) -> np.ndarray:
        """All entries, both blocks; mirrored adjacency entries appear twice."""
        return np.concatenate([self.node_features.ravel(), self.adjacency.ravel()])

    def to_free_vector(self) -> np.ndarray:
        """Features followed by the strict upper triangle of the adjacency."""
        iu = triu_index(self.n_nodes)
        return np.concatenate([self.node_features.ravel(), self.adjacency[iu]])

    @classmethod
    def from_full_vector(cls, vec: np.ndarray, n_nodes: int, n_features: int) -> "GraphState":
        vec = np.asarray(vec, dtype=float)
        x = vec[: n_nodes * n_features].reshape(n_nodes, n_features)
        a = vec[n_nodes * n_features :].reshape(n_nodes, n_nodes)
        return cls._wrap(x.copy(), symmetrize(a))

    @classmethod
    def from_free_vector(cls, vec: np.ndarray, n_nodes: int, n_features: int) -> "GraphState":
        vec = np.asarray(vec, dtype=float)
        x = vec[: n_nodes * n_features].reshape(n_nodes, n_features)
        a = np.zeros((n_nodes, n_nodes))
        iu = triu_index(n_nodes)
        a[iu] = vec[n_nodes * n_features :]
        a = a + a.T
        return cls._wrap(x.copy(), a)

    def is_finite(self) -> bool:
        return bool(
            np.isfinite(self.node_features).all() and np.isfinite(self.adjacency).all()
        )


def full_dot(a: GraphState, b: GraphState) -> float:
    """Frobenius inner product over both blocks (mirrored pairs count twice)."""
    return float(
        np.vdot(a.node_features, b.node_features) + np.vdot(a.adjacency, b.adjacency)
    )


def full_norm(a: GraphState) -> float:
    return float(np.sqrt(full_dot(a, a)))
