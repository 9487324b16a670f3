"""Sparse symmetric graphs and the energies driving modularity optimization.

The central object is :class:`SparseGraph`, an immutable CSR representation of
a nonnegatively weighted undirected graph with cached degrees and total weight
2m.  On top of it live the set and partition energies: cut, volume, graph
total variation, modularity with resolution parameter gamma, the balanced-cut
and balanced-TV reformulations of modularity, a Ginzburg-Landau diagnostic
energy, and the fidelity-augmented objective for semi-supervised runs.

Partitions are carried in two interchangeable views: an integer label vector
of length N, or an N x nhat one-hot assignment matrix.  Conversions between
the two are lossless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SparseGraph",
    "Supervision",
    "labels_to_matrix",
    "matrix_to_labels",
    "validate_partition_matrix",
    "cut",
    "volume",
    "graph_tv",
    "modularity",
    "balanced_cut",
    "balanced_cut_centered",
    "balanced_tv",
    "gl_energy",
    "ssl_energy",
]


@dataclass(frozen=True)
class SparseGraph:
    """Weighted undirected graph in compressed sparse row form.

    Invariants (enforced by the constructors, rechecked by :meth:`validate`):
    every stored entry (i, j, w) has a mirror (j, i, w) with the identical
    weight, all weights are positive (zero entries are not stored), the
    diagonal is empty, ``degrees`` equals the row sums of the weight matrix,
    and ``total_weight`` (2m) equals the sum of the degrees.

    Instances are immutable and safe to share across threads.
    """

    n_nodes: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray
    total_weight: float

    def __post_init__(self):
        for arr in (self.row_offsets, self.col_indices, self.weights, self.degrees):
            arr.flags.writeable = False
        adj = sp.csr_matrix(
            (self.weights, self.col_indices, self.row_offsets),
            shape=(self.n_nodes, self.n_nodes),
            copy=False,
        )
        object.__setattr__(self, "_adjacency", adj)
        object.__setattr__(self, "_row_index", None)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_scipy(cls, matrix) -> "SparseGraph":
        """Build from any scipy sparse matrix; must already be symmetric.

        Self-loops are stripped, explicit zeros dropped, duplicates summed.
        """
        w = sp.coo_matrix(matrix)
        if w.shape[0] != w.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got {w.shape}")
        keep = w.row != w.col
        w = sp.coo_matrix(
            (w.data[keep], (w.row[keep], w.col[keep])), shape=w.shape
        ).tocsr()
        w.sum_duplicates()
        w.eliminate_zeros()
        if w.nnz and w.data.min() < 0:
            raise ValueError("edge weights must be nonnegative")
        if (w != w.T).nnz != 0:
            raise ValueError("adjacency matrix must be symmetric")
        degrees = np.asarray(w.sum(axis=1)).ravel().astype(np.float64)
        return cls(
            n_nodes=w.shape[0],
            row_offsets=w.indptr.astype(np.int64),
            col_indices=w.indices.astype(np.int64),
            weights=w.data.astype(np.float64),
            degrees=degrees,
            total_weight=float(degrees.sum()),
        )

    @classmethod
    def from_coo(cls, n_nodes, rows, cols, weights, symmetrize=False) -> "SparseGraph":
        """Build from edge triplets.

        With ``symmetrize=True`` each triplet (i, j, w) also contributes
        (j, i, w); repeated triplets accumulate.  Without it the triplets must
        already describe a symmetric matrix.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if rows.size and (rows.min() < 0 or cols.min() < 0
                          or rows.max() >= n_nodes or cols.max() >= n_nodes):
            raise ValueError("node index out of range")
        if np.any(weights < 0):
            raise ValueError("edge weights must be nonnegative")
        if symmetrize:
            off = rows != cols
            rows, cols, weights = (
                np.concatenate([rows, cols[off]]),
                np.concatenate([cols, rows[off]]),
                np.concatenate([weights, weights[off]]),
            )
        w = sp.coo_matrix((weights, (rows, cols)), shape=(n_nodes, n_nodes))
        return cls.from_scipy(w)

    @classmethod
    def from_dense(cls, dense) -> "SparseGraph":
        return cls.from_scipy(sp.csr_matrix(np.asarray(dense, dtype=np.float64)))

    # -- views -------------------------------------------------------------

    @property
    def adjacency(self) -> sp.csr_matrix:
        """The weight matrix W as a scipy CSR matrix (shares storage)."""
        return self._adjacency

    @property
    def n_edges(self) -> int:
        """Number of undirected edges (stored entries / 2)."""
        return self.col_indices.size // 2

    def row_index(self) -> np.ndarray:
        """Source node of each stored entry; cached after first use."""
        if self._row_index is None:
            idx = np.repeat(
                np.arange(self.n_nodes, dtype=np.int64), np.diff(self.row_offsets)
            )
            idx.flags.writeable = False
            object.__setattr__(self, "_row_index", idx)
        return self._row_index

    def subgraph(self, nodes) -> "SparseGraph":
        """Induced subgraph on ``nodes`` (relabeled 0..len(nodes)-1)."""
        nodes = _check_subset(self, nodes)
        return SparseGraph.from_scipy(self._adjacency[nodes][:, nodes])

    def validate(self, rtol: float = 1e-12) -> None:
        """Recheck all structural invariants; raises ValueError on failure."""
        w = self._adjacency
        if w.nnz and w.data.min() < 0:
            raise ValueError("negative edge weight")
        if w.diagonal().any():
            raise ValueError("self-loop stored on the diagonal")
        if (w != w.T).nnz != 0:
            raise ValueError("stored matrix is not symmetric")
        row_sums = np.asarray(w.sum(axis=1)).ravel()
        scale = max(1.0, float(np.abs(row_sums).max(initial=0.0)))
        if np.max(np.abs(row_sums - self.degrees), initial=0.0) > rtol * scale:
            raise ValueError("cached degrees disagree with row sums")
        total = float(self.degrees.sum())
        if abs(total - self.total_weight) > rtol * max(1.0, abs(total)):
            raise ValueError("cached total weight disagrees with degree sum")


def _check_subset(graph: SparseGraph, subset) -> np.ndarray:
    nodes = np.unique(np.asarray(subset, dtype=np.int64).ravel())
    if nodes.size and (nodes[0] < 0 or nodes[-1] >= graph.n_nodes):
        raise ValueError(
            f"node index out of range [0, {graph.n_nodes}): {nodes[0 if nodes[0] < 0 else -1]}"
        )
    return nodes


def _as_column_matrix(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 1:
        u = u[:, None]
    if u.ndim != 2:
        raise ValueError(f"assignment array must be 1-d or 2-d, got ndim={u.ndim}")
    return u


# -- partition views --------------------------------------------------------


def labels_to_matrix(labels, n_communities: int | None = None) -> np.ndarray:
    """One-hot N x nhat matrix for an integer label vector."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    nhat = int(labels.max()) + 1 if labels.size else 0
    if n_communities is not None:
        if labels.size and labels.max() >= n_communities:
            raise ValueError("label id exceeds the requested community count")
        nhat = n_communities
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    u = np.zeros((labels.size, nhat), dtype=np.float64)
    u[np.arange(labels.size), labels] = 1.0
    return u


def matrix_to_labels(u) -> np.ndarray:
    """Label vector for a one-hot partition matrix (validates the input)."""
    u = validate_partition_matrix(u)
    return np.argmax(u, axis=1).astype(np.int64)


def validate_partition_matrix(u) -> np.ndarray:
    """Check that every row of ``u`` is one-hot; returns the array."""
    u = _as_column_matrix(u)
    if not np.all((u == 0.0) | (u == 1.0)):
        raise ValueError("partition matrix entries must be 0 or 1")
    if not np.all(u.sum(axis=1) == 1.0):
        raise ValueError("every partition matrix row must have exactly one 1")
    return u


@dataclass(frozen=True)
class Supervision:
    """Known labels for a subset of nodes plus the fidelity weight.

    ``nodes`` lists the supervised node ids, ``targets`` holds the matching
    one-hot rows of the target matrix f, and ``weight`` is the fidelity
    strength (lambda >= 0).
    """

    nodes: np.ndarray
    targets: np.ndarray
    weight: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.int64).ravel()
        targets = validate_partition_matrix(self.targets)
        if nodes.size != np.unique(nodes).size:
            raise ValueError("supervised node ids must be unique")
        if targets.shape[0] != nodes.size:
            raise ValueError("one target row per supervised node required")
        if self.weight < 0:
            raise ValueError("fidelity weight must be nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "targets", targets)

    @classmethod
    def from_labels(cls, nodes, labels, n_communities: int, weight: float) -> "Supervision":
        return cls(
            nodes=np.asarray(nodes, dtype=np.int64),
            targets=labels_to_matrix(labels, n_communities),
            weight=float(weight),
        )

    @property
    def n_communities(self) -> int:
        return self.targets.shape[1]

    def check_against(self, n_nodes: int, n_communities: int) -> None:
        if self.nodes.size and (self.nodes.min() < 0 or self.nodes.max() >= n_nodes):
            raise ValueError("supervised node id out of range")
        if self.n_communities != n_communities:
            raise ValueError(
                f"supervision targets have {self.n_communities} columns, expected {n_communities}"
            )


# -- energies ---------------------------------------------------------------


def cut(graph: SparseGraph, subset) -> float:
    """Total weight crossing from ``subset`` to its complement.

    Returns sum_{i in S, j notin S} w_ij (each crossing edge counted once per
    stored direction leaving S).
    """
    nodes = _check_subset(graph, subset)
    inside = np.zeros(graph.n_nodes, dtype=bool)
    inside[nodes] = True
    i = graph.row_index()
    mask = inside[i] & ~inside[graph.col_indices]
    return float(graph.weights[mask].sum())


def volume(graph: SparseGraph, subset) -> float:
    """Sum of degrees over ``subset``; the whole node set has volume 2m."""
    nodes = _check_subset(graph, subset)
    return float(graph.degrees[nodes].sum())


def graph_tv(graph: SparseGraph, u) -> float:
    """Graph total variation of a node function.

    For a vector, (1/2) sum_ij w_ij |u_i - u_j|; columns of a matrix are
    summed.  On an indicator column this equals the cut of the indicated set,
    and on a partition matrix the sum of all community cuts.
    """
    u = _as_column_matrix(u)
    if u.shape[0] != graph.n_nodes:
        raise ValueError(
            f"assignment has {u.shape[0]} rows for a graph with {graph.n_nodes} nodes"
        )
    i = graph.row_index()
    diffs = np.abs(u[i] - u[graph.col_indices])
    return 0.5 * float(graph.weights @ diffs.sum(axis=1) if u.shape[1] > 1
                       else graph.weights @ diffs[:, 0])


def _community_sums(graph: SparseGraph, labels: np.ndarray):
    """(within-community ordered-pair weight, per-community volumes)."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size != graph.n_nodes:
        raise ValueError("label vector length must equal the node count")
    if labels.size and labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    i = graph.row_index()
    same = labels[i] == labels[graph.col_indices]
    w_in = float(graph.weights[same].sum())
    vols = np.bincount(labels, weights=graph.degrees)
    return w_in, vols


def modularity(graph: SparseGraph, labels, gamma: float) -> float:
    """Modularity of a partition with resolution parameter gamma.

    Q = (1/2m) sum_l sum_{i,j in A_l} (w_ij - gamma k_i k_j / 2m), with both
    inner sums over ordered pairs.  The all-in-one-community partition scores
    exactly 1 - gamma.
    """
    if gamma <= 0:
        raise ValueError("resolution parameter gamma must be positive")
    if graph.total_weight == 0:
        raise ValueError("modularity is undefined on a graph with no edges (2m = 0)")
    w_in, vols = _community_sums(graph, labels)
    twom = graph.total_weight
    return (w_in - gamma * float(vols @ vols) / twom) / twom


def balanced_cut(graph: SparseGraph, labels, gamma: float) -> float:
    """Cut-plus-squared-volume form: sum_l [Cut(A_l, A_l^c) + (g/2m) vol(A_l)^2].

    Minimizers coincide with modularity maximizers;
    modularity = 1 - balanced_cut / 2m exactly.
    """
    if graph.total_weight == 0:
        raise ValueError("undefined on a graph with no edges (2m = 0)")
    w_in, vols = _community_sums(graph, labels)
    twom = graph.total_weight
    return (twom - w_in) + gamma * float(vols @ vols) / twom


def balanced_cut_centered(graph: SparseGraph, labels, gamma: float, n_communities: int) -> float:
    """Equivalent balanced-cut form with volumes measured against 2m/nhat.

    sum_l [Cut(A_l, A_l^c) + (g/2m)(vol A_l - 2m/nhat)^2] + g 2m/nhat.  Equal
    to :func:`balanced_cut` as an algebraic identity; the quadratic term
    vanishes exactly for perfectly volume-balanced partitions.
    """
    if n_communities < 1:
        raise ValueError("community count must be at least 1")
    if graph.total_weight == 0:
        raise ValueError("undefined on a graph with no edges (2m = 0)")
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if labels.size and labels.max() >= n_communities:
        raise ValueError("label id exceeds the declared community count")
    w_in, vols = _community_sums(graph, labels)
    twom = graph.total_weight
    if vols.size < n_communities:  # trailing empty communities still penalized
        vols = np.concatenate([vols, np.zeros(n_communities - vols.size)])
    target = twom / n_communities
    dev = vols - target
    return (twom - w_in) + gamma * float(dev @ dev) / twom + gamma * target


def balanced_tv(graph: SparseGraph, u, gamma: float) -> float:
    """TV form of the balanced objective: |u|_TV + (g/2m) ||k^T u||_2^2.

    Defined for arbitrary real N x nhat matrices; on partition matrices it
    equals :func:`balanced_cut` of the corresponding labels.
    """
    if graph.total_weight == 0:
        raise ValueError("undefined on a graph with no edges (2m = 0)")
    u = _as_column_matrix(u)
    tv = graph_tv(graph, u)  # also validates the row count
    ktu = graph.degrees @ u
    return tv + gamma * float(ktu @ ktu) / graph.total_weight


def _multiwell_potential(u: np.ndarray) -> np.ndarray:
    """P(v) = prod_l (1/4)||v - e_l||^2 per row; exactly 0 at simplex corners."""
    sq_norms = np.einsum("ij,ij->i", u, u)
    terms = 0.25 * (sq_norms[:, None] - 2.0 * u + 1.0)
    return np.prod(terms, axis=1)


def gl_energy(graph: SparseGraph, u, gamma: float, epsilon: float) -> float:
    """Ginzburg-Landau diagnostic energy.

    trace(u^T L u) + (1/eps) sum_i P(u_i) + (g/2m) ||k^T u||_2^2 with the
    multiwell potential P above.  Used to monitor runs; never optimized
    directly.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if graph.total_weight == 0:
        raise ValueError("undefined on a graph with no edges (2m = 0)")
    u = _as_column_matrix(u)
    if u.shape[0] != graph.n_nodes:
        raise ValueError("row count must equal the node count")
    lap_u = graph.degrees[:, None] * u - graph.adjacency @ u
    dirichlet = float(np.einsum("ij,ij->", u, lap_u))
    potential = float(_multiwell_potential(u).sum()) / epsilon
    ktu = graph.degrees @ u
    return dirichlet + potential + gamma * float(ktu @ ktu) / graph.total_weight


def ssl_energy(graph: SparseGraph, u, gamma: float, supervision: Supervision) -> float:
    """Balanced TV plus the fidelity penalty on supervised rows.

    balanced_tv(u) + lambda * sum over supervised rows ||u_i - f_i||^2.
    """
    u = _as_column_matrix(u)
    supervision.check_against(graph.n_nodes, u.shape[1])
    resid = u[supervision.nodes] - supervision.targets
    return balanced_tv(graph, u, gamma) + supervision.weight * float(
        np.einsum("ij,ij->", resid, resid)
    )
