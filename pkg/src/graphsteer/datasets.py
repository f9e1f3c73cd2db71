"""Synthetic graph families and the plain-text dataset format.

Families are desk-scale stand-ins for the usual small-graph benchmarks:
two-block SBMs, ego graphs (a hub wired to everyone plus an ER subgraph
among the rest), and plain ER graphs. Node features are one-hot degree
buckets so the feature block has something realistic to diffuse.

Dataset files are JSON lines, one graph per line:

    {"n": <int>, "adjacency": [<row-major 0/1 entries>],
     "features": [[...], ...],            # optional, n x f
     "attributes": [0, 1, ...]}           # optional, length n

The same format is used for generated-output dumps, so outputs can feed back
in as a new empirical prior.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .rewards import edge_count, max_degree, triangle_count
from .state import GraphState

DATASET_FAMILIES = ("sbm2", "ego_er", "er")
PERCENTILE_STATS = {
    "edge_count": edge_count,
    "triangle_count": triangle_count,
    "max_degree": max_degree,
}


def _check_prob(p: float, name: str) -> float:
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"{name} must be in [0, 1], got {p}")
    return float(p)


def degree_bucket_features(a: np.ndarray, n_buckets: int) -> np.ndarray:
    """One-hot of min(degree, n_buckets - 1)."""
    deg = a.sum(axis=1).astype(int)
    x = np.zeros((a.shape[0], n_buckets))
    x[np.arange(a.shape[0]), np.minimum(deg, n_buckets - 1)] = 1.0
    return x


def _from_upper(n: int, upper: np.ndarray) -> np.ndarray:
    a = np.zeros((n, n))
    a[np.triu_indices(n, k=1)] = upper
    return a + a.T


def _er_adjacency(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    n_pairs = n * (n - 1) // 2
    return _from_upper(n, (rng.random(n_pairs) < p).astype(float))


def _sbm2_adjacency(
    block_size: int, p_in: float, p_out: float, rng: np.random.Generator
) -> np.ndarray:
    n = 2 * block_size
    blocks = np.repeat([0, 1], block_size)
    iu = np.triu_indices(n, k=1)
    same_block = blocks[iu[0]] == blocks[iu[1]]
    probs = np.where(same_block, p_in, p_out)
    return _from_upper(n, (rng.random(len(probs)) < probs).astype(float))


def _ego_er_adjacency(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    if n < 2:
        raise ConfigurationError("ego_er needs at least 2 nodes")
    a = np.zeros((n, n))
    a[0, 1:] = 1.0
    a[1:, 0] = 1.0
    rest = _er_adjacency(n - 1, p, rng)
    a[1:, 1:] = rest
    return a


def generate_dataset(
    family: str,
    params: dict,
    count: int,
    rng: np.random.Generator,
    n_feature_buckets: int = 4,
) -> list[GraphState]:
    """Draw `count` quantized graphs from the given family."""
    if count < 1:
        raise ConfigurationError(f"count must be >= 1, got {count}")
    if family == "sbm2":
        block_size = int(params["block_size"])
        p_in = _check_prob(params["p_in"], "p_in")
        p_out = _check_prob(params["p_out"], "p_out")
        draw = lambda: _sbm2_adjacency(block_size, p_in, p_out, rng)
    elif family == "ego_er":
        n, p = int(params["n"]), _check_prob(params["p"], "p")
        draw = lambda: _ego_er_adjacency(n, p, rng)
    elif family == "er":
        n, p = int(params["n"]), _check_prob(params["p"], "p")
        draw = lambda: _er_adjacency(n, p, rng)
    else:
        raise ConfigurationError(f"unknown dataset family {family!r}")

    graphs = []
    for _ in range(count):
        a = draw()
        graphs.append(GraphState(degree_bucket_features(a, n_feature_buckets), a))
    return graphs


def sbm2_labels(block_size: int) -> np.ndarray:
    return np.repeat([0, 1], block_size)


def percentile_bound(
    dataset: list[GraphState], stat: str, percentile: float = 10.0
) -> float:
    """Lower-tail empirical quantile of a count statistic over the dataset."""
    if not dataset:
        raise ValueError("dataset must be nonempty")
    stat_fn = PERCENTILE_STATS[stat]
    values = [stat_fn(g.adjacency) for g in dataset]
    return float(np.percentile(values, percentile))


# -- file format ---------------------------------------------------------------


def save_graphs(
    path: str | Path,
    graphs: list[GraphState],
    attributes: np.ndarray | None = None,
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for g in graphs:
            adjacency = g.adjacency
            if np.isin(adjacency, (0.0, 1.0)).all():
                adj_list = adjacency.astype(int).ravel().tolist()
            else:
                adj_list = adjacency.ravel().tolist()
            record = {"n": g.n_nodes, "adjacency": adj_list}
            if g.n_features:
                record["features"] = g.node_features.tolist()
            if attributes is not None:
                record["attributes"] = np.asarray(attributes).astype(int).tolist()
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_graphs(path: str | Path) -> list[GraphState]:
    path = Path(path)
    graphs = []
    with path.open() as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                n = int(record["n"])
                a = np.asarray(record["adjacency"], dtype=float).reshape(n, n)
                if "features" in record:
                    x = np.asarray(record["features"], dtype=float)
                else:
                    x = np.zeros((n, 0))
                graphs.append(GraphState(x, a))
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ConfigurationError(
                    f"{path}:{line_no}: malformed graph record ({exc})"
                ) from exc
    if not graphs:
        raise ConfigurationError(f"{path}: no graph records found")
    return graphs
