"""File formats: edge lists, label CSVs, feature matrices, assignment dumps.

Edge list: whitespace-separated lines ``i j w`` with 0-based node indices,
one undirected edge per line (the loader adds both directions); ``#`` starts
a comment line.  Labels: CSV ``node,label`` with a header.  Features: CSV of
floats, one row per point, no header.  Assignment matrices: dense CSV, one
row per node.
"""

from __future__ import annotations

import numpy as np

from .graph import SparseGraph

__all__ = [
    "load_edge_list",
    "save_edge_list",
    "load_labels",
    "load_label_pairs",
    "save_labels",
    "load_features",
    "save_features",
    "save_matrix",
]


def load_edge_list(path, n_nodes: int | None = None) -> SparseGraph:
    """Parse an edge-list file into a validated :class:`SparseGraph`.

    Malformed lines and negative weights are reported with their 1-based line
    number.  ``n_nodes`` forces the node count (for graphs with trailing
    isolated nodes); otherwise it is max index + 1.
    """
    rows, cols, weights = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 3:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'i j w', got {text!r}"
                )
            try:
                i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}: could not parse 'i j w' from {text!r}"
                ) from None
            if i < 0 or j < 0:
                raise ValueError(f"{path}: line {lineno}: negative node index")
            if w < 0:
                raise ValueError(f"{path}: line {lineno}: negative weight {w}")
            rows.append(i)
            cols.append(j)
            weights.append(w)
    if n_nodes is None:
        n_nodes = max(max(rows, default=-1), max(cols, default=-1)) + 1
    graph = SparseGraph.from_coo(n_nodes, rows, cols, weights, symmetrize=True)
    graph.validate()
    return graph


def save_edge_list(path, graph: SparseGraph) -> None:
    """Write one line per undirected edge (upper triangle of W)."""
    i = graph.row_index()
    j = graph.col_indices
    upper = i < j
    with open(path, "w") as fh:
        fh.write("# i j w\n")
        for a, b, w in zip(i[upper], j[upper], graph.weights[upper]):
            fh.write(f"{a} {b} {float(w)!r}\n")


def load_labels(path) -> np.ndarray:
    """Read a ``node,label`` CSV (header required) into a label vector."""
    pairs = []
    with open(path) as fh:
        header = fh.readline()
        if header.strip().lower() != "node,label":
            raise ValueError(f"{path}: expected header 'node,label', got {header.strip()!r}")
        for lineno, line in enumerate(fh, start=2):
            text = line.strip()
            if not text:
                continue
            parts = text.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 'node,label'")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-integer entry") from None
    if not pairs:
        return np.zeros(0, dtype=np.int64)
    nodes = np.array([p[0] for p in pairs], dtype=np.int64)
    labels = np.array([p[1] for p in pairs], dtype=np.int64)
    if np.unique(nodes).size != nodes.size:
        raise ValueError(f"{path}: duplicate node ids")
    out = np.full(int(nodes.max()) + 1, -1, dtype=np.int64)
    out[nodes] = labels
    if np.any(out < 0):
        raise ValueError(f"{path}: missing node ids (expected 0..{nodes.max()})")
    return out


def load_label_pairs(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``node,label`` CSV covering an arbitrary subset of nodes.

    Unlike :func:`load_labels` the node ids need not be contiguous; used for
    supervision files.  Returns (nodes, labels).
    """
    nodes, labels = [], []
    with open(path) as fh:
        header = fh.readline()
        if header.strip().lower() != "node,label":
            raise ValueError(f"{path}: expected header 'node,label', got {header.strip()!r}")
        for lineno, line in enumerate(fh, start=2):
            text = line.strip()
            if not text:
                continue
            parts = text.split(",")
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 'node,label'")
            try:
                nodes.append(int(parts[0]))
                labels.append(int(parts[1]))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-integer entry") from None
    return np.asarray(nodes, dtype=np.int64), np.asarray(labels, dtype=np.int64)


def save_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.int64).ravel()
    with open(path, "w") as fh:
        fh.write("node,label\n")
        for node, label in enumerate(labels):
            fh.write(f"{node},{label}\n")


def load_features(path) -> np.ndarray:
    """Read a headerless float CSV into an N x d feature matrix."""
    values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    if values.size == 0:
        raise ValueError(f"{path}: empty feature file")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{path}: non-finite feature entries")
    return values


def save_features(path, features) -> None:
    np.savetxt(path, np.asarray(features, dtype=np.float64), delimiter=",", fmt="%.17g")


def save_matrix(path, u) -> None:
    """Dense CSV dump of a soft or one-hot assignment matrix, row per node."""
    np.savetxt(path, np.asarray(u, dtype=np.float64), delimiter=",", fmt="%.17g")
