"""Input validation helpers for user-facing entry points."""

from __future__ import annotations

import numpy as np

from .state import GraphState, symmetrize


def check_adjacency(a, n_nodes: int | None = None) -> np.ndarray:
    """Coerce to a float square matrix, symmetrizing near-symmetric input."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"adjacency must be a square matrix, got shape {a.shape}")
    if n_nodes is not None and a.shape[0] != n_nodes:
        raise ValueError(f"expected {n_nodes} nodes, got {a.shape[0]}")
    if not np.allclose(a, a.T, atol=1e-8):
        raise ValueError("adjacency is not symmetric")
    return symmetrize(a)


def check_binary_adjacency(a, n_nodes: int | None = None) -> np.ndarray:
    a = check_adjacency(a, n_nodes)
    if not np.isin(a, (0.0, 1.0)).all():
        raise ValueError("adjacency must contain only 0/1 entries")
    return a


def check_attributes(z, n_nodes: int) -> np.ndarray:
    """Binary sensitive-attribute / group-label vector with both groups present."""
    z = np.asarray(z)
    if z.shape != (n_nodes,):
        raise ValueError(f"attribute vector must have shape ({n_nodes},), got {z.shape}")
    if not np.isin(z, (0, 1)).all():
        raise ValueError("attributes must be 0/1")
    return z.astype(int)


def as_graph_state(g, n_features: int = 0) -> GraphState:
    """Accept a GraphState or a bare adjacency matrix."""
    if isinstance(g, GraphState):
        return g
    return GraphState.from_adjacency(check_adjacency(g), n_features)
