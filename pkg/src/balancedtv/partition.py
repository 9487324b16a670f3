"""Strategies for choosing the number of communities.

Three policies: a fixed count, a modularity-maximizing sweep over a range of
counts that reuses a single eigenbasis, and recursive splitting gated on
full-graph modularity gain.  Also provides the k-means-on-eigenvectors
initialization used to seed runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigen import DiffusionOperator, EigenBasis, smallest_eigenpairs
from .graph import SparseGraph, Supervision, labels_to_matrix, modularity
from .mbo import DT_CAP_FACTOR, MboConfig, MboResult, mbo_run, select_timestep

__all__ = [
    "FixedCommunities",
    "CommunitySweep",
    "RecursiveSplit",
    "kmeans_init",
    "sweep_nhat",
    "recursive_partition",
]


@dataclass(frozen=True)
class FixedCommunities:
    nhat: int

    def __post_init__(self):
        if self.nhat < 1:
            raise ValueError("nhat must be at least 1")


@dataclass(frozen=True)
class CommunitySweep:
    nhat_min: int
    nhat_max: int

    def __post_init__(self):
        if not 1 <= self.nhat_min <= self.nhat_max:
            raise ValueError("sweep bounds must satisfy 1 <= min <= max")


@dataclass(frozen=True)
class RecursiveSplit:
    split_factor: int = 2
    min_size: int = 4
    gain_tol: float = 1e-10

    def __post_init__(self):
        if self.split_factor < 2:
            raise ValueError("split_factor must be at least 2")
        if self.min_size < 2:
            raise ValueError("min_size must be at least 2")
        if self.gain_tol < 0:
            raise ValueError("gain_tol must be nonnegative")


PartitionStrategy = FixedCommunities | CommunitySweep | RecursiveSplit


def _kmeans_labels(points: np.ndarray, k: int, rng: np.random.Generator,
                   max_iter: int = 100, restarts: int = 4) -> np.ndarray:
    """Seeded k-means++ / Lloyd, best of ``restarts`` by inertia.

    Empty clusters are re-seeded at the point farthest from its centroid;
    clusters still empty after that are filled with a random point.
    """
    n = points.shape[0]
    if k == 1:
        return np.zeros(n, dtype=np.int64)
    if k >= n:
        return np.arange(n, dtype=np.int64) % k

    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        centers = np.empty((k, points.shape[1]))
        centers[0] = points[rng.integers(n)]
        dist_sq = np.sum((points - centers[0]) ** 2, axis=1)
        for c in range(1, k):  # k-means++ seeding
            total = dist_sq.sum()
            if total <= 0:
                centers[c] = points[rng.integers(n)]
                continue
            centers[c] = points[rng.choice(n, p=dist_sq / total)]
            dist_sq = np.minimum(dist_sq, np.sum((points - centers[c]) ** 2, axis=1))

        labels = np.zeros(n, dtype=np.int64)
        for _ in range(max_iter):
            dists = (
                np.sum(points**2, axis=1)[:, None]
                - 2.0 * points @ centers.T
                + np.sum(centers**2, axis=1)[None, :]
            )
            new_labels = np.argmin(dists, axis=1)
            for c in range(k):
                members = new_labels == c
                if members.any():
                    centers[c] = points[members].mean(axis=0)
                else:
                    farthest = np.argmax(np.min(dists, axis=1))
                    centers[c] = points[farthest]
                    new_labels[farthest] = c
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        for c in range(k):  # orphaned clusters get a random member
            if not np.any(labels == c):
                labels[rng.integers(n)] = c
        inertia = float(
            np.sum((points - centers[labels]) ** 2)
        )
        if inertia < best_inertia:
            best_labels, best_inertia = labels.copy(), inertia
    return best_labels


def kmeans_init(basis: EigenBasis, nhat: int, seed: int = 0) -> np.ndarray:
    """One-hot initialization from k-means on the nhat leading eigenvectors."""
    if nhat < 1:
        raise ValueError("nhat must be at least 1")
    if basis.n_eig < nhat:
        raise ValueError(
            f"basis holds {basis.n_eig} eigenvectors, need at least {nhat}"
        )
    rng = np.random.default_rng(seed)
    labels = _kmeans_labels(basis.eigenvectors[:, :nhat], nhat, rng)
    return labels_to_matrix(labels, nhat)


def _sweep_timesteps(graph: SparseGraph, gamma: float, basis: EigenBasis,
                     config: MboConfig, ladder: int) -> list[float]:
    """Candidate timesteps for one sweep: the automatic choice plus, when the
    ladder is enabled, a geometric ladder across the admissible range
    [tau_lo, cap].  Diffusion reuses the one basis, so extra timesteps cost
    no eigenwork."""
    auto = select_timestep(basis, graph, gamma, config)
    if config.dt is not None or ladder < 1:
        return [auto]
    tau_lo = np.log(2.0) / (2.0 * (gamma + 1.0) * float(graph.degrees.max()))
    rungs = tau_lo * np.logspace(0.1, np.log10(DT_CAP_FACTOR), ladder)
    return sorted(set(float(dt) for dt in rungs) | {auto})


def sweep_nhat(graph: SparseGraph, gamma: float, nhats, config: MboConfig,
               supervision: Supervision | None = None,
               basis: EigenBasis | None = None,
               dt_ladder: int = 8) -> MboResult:
    """Run the MBO solve for each candidate community count and keep the
    partition with the best modularity (ties to the smaller count).

    A single eigenbasis with 5 * max(nhats) vectors (capped at N) is computed
    once and shared by every run; pass ``basis`` to reuse one computed
    elsewhere.  Unless ``config.dt`` pins the timestep, each count is also
    tried across a ``dt_ladder``-rung geometric ladder of timesteps (the
    automatic choice always included): fixed points of the threshold
    dynamics depend on the timestep, and with the basis amortized the extra
    runs are nearly free.  ``dt_ladder=0`` restricts the sweep to the
    automatic timestep only.
    """
    nhats = sorted(set(int(h) for h in nhats))
    if not nhats:
        raise ValueError("empty sweep range")
    if nhats[0] < 1:
        raise ValueError("community counts must be at least 1")
    if basis is None:
        n_eig = min(5 * nhats[-1], graph.n_nodes)
        basis = smallest_eigenpairs(
            DiffusionOperator(graph, gamma), n_eig, seed=config.seed
        )
    timesteps = _sweep_timesteps(graph, gamma, basis, config, dt_ladder)
    best = None
    for nhat in nhats:
        sup = None
        if supervision is not None:
            sup = Supervision.from_labels(
                supervision.nodes,
                np.argmax(supervision.targets, axis=1),
                nhat,
                supervision.weight,
            )
        for dt in timesteps:
            run_config = MboConfig(
                gamma=gamma,
                nhat=nhat,
                n_eig=basis.n_eig,
                dt=dt,
                decay_epsilon=config.decay_epsilon,
                max_iters=config.max_iters,
                seed=config.seed,
                refine=config.refine,
                refine_factor=config.refine_factor,
            )
            result = mbo_run(graph, basis, run_config, supervision=sup)
            if best is None or result.modularity > best.modularity:
                best = result
    return best


def recursive_partition(graph: SparseGraph, gamma: float, config: MboConfig,
                        split_factor: int = 2, min_size: int = 4,
                        gain_tol: float = 1e-10) -> np.ndarray:
    """Recursively split communities while full-graph modularity increases.

    Starts from a single community.  Each community of at least ``min_size``
    nodes is split by an MBO run on its induced subgraph (own operator and
    eigenbasis, k-means initialization, nhat = split_factor); the split is
    kept only if modularity of the whole graph, with the original degrees and
    total weight, increases by more than ``gain_tol``.  Accepted parts are
    revisited until no community admits a profitable split.  Returns
    contiguous labels.
    """
    strategy = RecursiveSplit(split_factor, min_size, gain_tol)  # validates
    labels = np.zeros(graph.n_nodes, dtype=np.int64)
    current_q = modularity(graph, labels, gamma)
    pending = [np.arange(graph.n_nodes, dtype=np.int64)]
    next_label = 1
    subproblem = 0

    while pending:
        members = pending.pop()
        if members.size < strategy.min_size:
            continue
        sub = graph.subgraph(members)
        if sub.total_weight == 0:
            continue
        op = DiffusionOperator(sub, gamma)
        n_eig = min(5 * strategy.split_factor, sub.n_nodes)
        sub_seed = config.seed + subproblem
        subproblem += 1
        basis = smallest_eigenpairs(op, n_eig, seed=sub_seed)
        sub_config = MboConfig(
            gamma=gamma,
            nhat=strategy.split_factor,
            n_eig=n_eig,
            dt=config.dt,
            decay_epsilon=config.decay_epsilon,
            max_iters=config.max_iters,
            seed=sub_seed,
            refine=config.refine,
            refine_factor=config.refine_factor,
        )
        init = kmeans_init(basis, strategy.split_factor, seed=sub_seed)
        result = mbo_run(sub, basis, sub_config, init=init)

        parts = np.unique(result.labels)
        if parts.size < 2:
            continue
        candidate = labels.copy()
        for part in parts[1:]:  # first part keeps the parent label
            candidate[members[result.labels == part]] = next_label
            next_label += 1
        candidate_q = modularity(graph, candidate, gamma)
        if candidate_q > current_q + strategy.gain_tol:
            labels = candidate
            current_q = candidate_q
            for part in parts:
                pending.append(members[result.labels == part])

    _, contiguous = np.unique(labels, return_inverse=True)
    return contiguous.astype(np.int64)
