"""Matrix-free diffusion operator and its low-end eigendecomposition.

The operator is L + (gamma/m) k k^T with L the combinatorial Laplacian
diag(k) - W.  It is symmetric positive semi-definite, applied in O(nnz)
without ever materializing the rank-one term.  The smallest eigenpairs are
computed with an implicitly restarted Lanczos iteration on the spectral fold
c*I - M (c an upper bound on ||M||), which turns the low end of the spectrum
into the well-separated high end of a PSD operator; small problems fall back
to a dense solve.
"""

from __future__ import annotations

import hashlib
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .graph import SparseGraph

__all__ = [
    "DiffusionOperator",
    "EigenBasis",
    "smallest_eigenpairs",
    "dense_spectrum",
    "graph_fingerprint",
    "save_basis",
    "load_basis",
    "cached_eigenbasis",
]

DENSE_ORACLE_LIMIT = 2000
_CACHE_MAGIC = b"BTVEIG1\x00"


@dataclass(frozen=True)
class DiffusionOperator:
    """The linear operator L + (gamma/m) k k^T driving the diffusion step."""

    graph: SparseGraph
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.graph.total_weight <= 0:
            raise ValueError("operator undefined on a graph with no edges")

    @property
    def m(self) -> float:
        return self.graph.total_weight / 2.0

    @property
    def shape(self) -> tuple[int, int]:
        n = self.graph.n_nodes
        return (n, n)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """M v = k*v - W v + (gamma/m) k (k . v); accepts vectors or matrices."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape[0] != self.graph.n_nodes:
            raise ValueError(
                f"vector has {v.shape[0]} rows for a {self.graph.n_nodes}-node operator"
            )
        k = self.graph.degrees
        coeff = self.gamma / self.m
        if v.ndim == 1:
            return k * v - self.graph.adjacency @ v + coeff * (k @ v) * k
        return k[:, None] * v - self.graph.adjacency @ v + coeff * np.outer(k, k @ v)

    def infinity_norm_bound(self) -> float:
        """2 (1 + gamma) k_max, an upper bound on the infinity norm of M."""
        return 2.0 * (1.0 + self.gamma) * float(self.graph.degrees.max())

    def to_dense(self, max_nodes: int = DENSE_ORACLE_LIMIT) -> np.ndarray:
        n = self.graph.n_nodes
        if n > max_nodes:
            raise ValueError(f"refusing to materialize a {n}x{n} dense operator")
        k = self.graph.degrees
        lap = np.diag(k) - self.graph.adjacency.toarray()
        return lap + (self.gamma / self.m) * np.outer(k, k)

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.apply, dtype=np.float64)


@dataclass(frozen=True)
class EigenBasis:
    """The n_eig smallest eigenpairs of a diffusion operator.

    ``eigenvalues`` ascend, ``eigenvectors`` has orthonormal columns, and
    ``operator_inf_bound`` carries 2(1+gamma)k_max for timestep selection.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    operator_inf_bound: float

    def __post_init__(self):
        object.__setattr__(
            self, "eigenvalues", np.asarray(self.eigenvalues, dtype=np.float64)
        )
        object.__setattr__(
            self, "eigenvectors", np.asarray(self.eigenvectors, dtype=np.float64)
        )
        if self.eigenvalues.ndim != 1 or self.eigenvectors.ndim != 2:
            raise ValueError("eigenvalues must be 1-d and eigenvectors 2-d")
        if self.eigenvectors.shape[1] != self.eigenvalues.size:
            raise ValueError("one eigenvector column per eigenvalue required")
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be ascending")

    @property
    def n_eig(self) -> int:
        return self.eigenvalues.size

    @property
    def n_nodes(self) -> int:
        return self.eigenvectors.shape[0]

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    def validate(self, op: DiffusionOperator, residual_tol: float = 1e-6,
                 ortho_tol: float = 1e-8) -> None:
        """Check orthonormality and per-pair residuals against the operator."""
        v = self.eigenvectors
        gram_err = np.abs(v.T @ v - np.eye(self.n_eig)).max()
        if gram_err > ortho_tol:
            raise ValueError(f"eigenvector columns not orthonormal (max err {gram_err:.3e})")
        resid = op.apply(v) - v * self.eigenvalues[None, :]
        resid_norms = np.linalg.norm(resid, axis=0)
        worst = float(resid_norms.max())
        if worst > residual_tol:
            raise ValueError(
                f"eigenpair residual {worst:.3e} exceeds tolerance {residual_tol:.1e}"
            )


def dense_spectrum(op: DiffusionOperator,
                   max_nodes: int = DENSE_ORACLE_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum via a dense symmetric eigendecomposition (test oracle)."""
    dense = op.to_dense(max_nodes=max_nodes)
    return scipy.linalg.eigh(dense)


def smallest_eigenpairs(op: DiffusionOperator, n_eig: int, tol: float = 1e-8,
                        seed: int = 0, max_restarts: int | None = None) -> EigenBasis:
    """The n_eig smallest eigenpairs of the diffusion operator.

    Uses ARPACK's restarted Lanczos on the folded operator c*I - M
    (c = 2(1+gamma)k_max >= ||M||) so the wanted pairs sit at the easy end of
    the spectrum; graphs small enough for a dense solve skip Krylov entirely.
    Deterministic for a fixed seed.  Raises RuntimeError on non-convergence,
    reporting the achieved residuals.
    """
    n = op.graph.n_nodes
    if not 1 <= n_eig <= n:
        raise ValueError(f"n_eig must lie in [1, {n}], got {n_eig}")
    bound = op.infinity_norm_bound()

    # one extra pair, when available, to detect a clustered truncation tail
    n_probe = min(n_eig + 1, n)
    if n <= 64 or n_probe >= n - 1:
        vals, vecs = dense_spectrum(op, max_nodes=max(n, DENSE_ORACLE_LIMIT))
        vals, vecs = vals[:n_probe], vecs[:, :n_probe]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(n)
        folded = spla.LinearOperator(
            (n, n), matvec=lambda v: bound * v - op.apply(v), dtype=np.float64
        )
        if max_restarts is None:
            max_restarts = 50 * n_eig
        try:
            mu, vecs = spla.eigsh(
                folded,
                k=n_probe,
                which="LA",
                tol=tol / max(1.0, bound),
                v0=v0,
                maxiter=max_restarts,
            )
        except spla.ArpackNoConvergence as exc:
            got = len(exc.eigenvalues)
            raise RuntimeError(
                f"Lanczos did not converge after {max_restarts} restart cycles: "
                f"{got}/{n_probe} pairs at tolerance {tol:.1e}"
            ) from exc
        vals = bound - mu
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    if n_probe > n_eig:
        gap = vals[n_eig] - vals[n_eig - 1]
        if gap <= 1e-10 * max(1.0, abs(float(vals[n_eig]))):
            warnings.warn(
                f"eigenvalue {n_eig - 1} and {n_eig} nearly coincide "
                f"(gap {gap:.3e}); the truncated basis splits a cluster",
                stacklevel=2,
            )
    basis = EigenBasis(
        eigenvalues=vals[:n_eig].copy(),
        eigenvectors=vecs[:, :n_eig].copy(),
        operator_inf_bound=bound,
    )
    basis.validate(op)
    return basis


# -- fingerprinting and the on-disk cache ------------------------------------


def graph_fingerprint(graph: SparseGraph) -> str:
    """Hex digest identifying the graph's exact CSR content."""
    digest = hashlib.sha256()
    digest.update(struct.pack("<q", graph.n_nodes))
    for arr in (graph.row_offsets, graph.col_indices, graph.weights):
        digest.update(np.ascontiguousarray(arr).tobytes())
    return digest.hexdigest()


def save_basis(path, basis: EigenBasis, gamma: float) -> None:
    """Binary dump: magic, int64 N, int64 n_eig, float64 gamma, float64
    inf-norm bound, then eigenvalues and row-major eigenvectors, all
    little-endian float64."""
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<qqdd", basis.n_nodes, basis.n_eig, gamma,
                             basis.operator_inf_bound))
        fh.write(basis.eigenvalues.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.eigenvectors, dtype="<f8").tobytes())


def load_basis(path) -> tuple[EigenBasis, float]:
    """Inverse of :func:`save_basis`; returns (basis, gamma)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CACHE_MAGIC))
        if magic != _CACHE_MAGIC:
            raise ValueError(f"{path}: not an eigenbasis cache file")
        n, n_eig, gamma, bound = struct.unpack("<qqdd", fh.read(32))
        vals = np.frombuffer(fh.read(8 * n_eig), dtype="<f8")
        vecs = np.frombuffer(fh.read(8 * n * n_eig), dtype="<f8").reshape(n, n_eig)
    basis = EigenBasis(
        eigenvalues=vals.astype(np.float64),
        eigenvectors=vecs.astype(np.float64),
        operator_inf_bound=bound,
    )
    return basis, gamma


def cached_eigenbasis(cache_dir, op: DiffusionOperator, n_eig: int,
                      tol: float = 1e-8, seed: int = 0) -> EigenBasis:
    """Load the basis for (graph, gamma, n_eig) from ``cache_dir``, computing
    and saving it on a miss."""
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = f"{graph_fingerprint(op.graph)[:24]}-g{op.gamma!r}-k{n_eig}.eig"
    path = cache_dir / key
    if path.exists():
        basis, _ = load_basis(path)
        return basis
    basis = smallest_eigenpairs(op, n_eig, tol=tol, seed=seed)
    save_basis(path, basis, op.gamma)
    return basis
