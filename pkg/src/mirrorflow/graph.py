"""Agent communication graphs and the spectral structure of their Laplacians.

Graphs are simple, undirected and connected. The spectral decomposition
canonicalizes the null eigenvector to the normalized all-ones direction so
that the reduced eigenbasis is deterministic across runs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import (
    DisconnectedGraphError,
    DuplicateEdgeError,
    EdgeIndexError,
    EigensolverError,
    InvalidParameterError,
    SelfLoopError,
)

# eigenvalues below this fraction of the largest are treated as null
_NULL_EIGENVALUE_REL_TOL = 1e-9


def _read_only(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Graph:
    """Simple undirected connected graph on agents 1..n.

    ``edges`` holds each edge once as a sorted 1-based pair. The adjacency
    matrix is a symmetric 0/1 array. Instances are immutable; build them
    through :func:`build_graph` or one of the generators.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: np.ndarray

    @cached_property
    def laplacian(self) -> np.ndarray:
        """Degree matrix minus adjacency."""
        degrees = self.adjacency.sum(axis=1)
        return _read_only(np.diag(degrees) - self.adjacency)

    def degree(self, agent: int) -> int:
        return int(self.adjacency[agent - 1].sum())

    def describe(self) -> str:
        return f"n={self.n}, m={len(self.edges)} edges"


def build_graph(n: int, edges) -> Graph:
    """Validate an edge list and build a connected :class:`Graph`.

    Edges are unordered 1-based pairs. Raises on self-loops, duplicate
    edges, out-of-range endpoints, and disconnected topologies.
    """
    if n < 1:
        raise InvalidParameterError(f"agent count must be positive, got {n}")
    seen: set[tuple[int, int]] = set()
    normalized: list[tuple[int, int]] = []
    adjacency = np.zeros((n, n))
    for pair in edges:
        i, j = int(pair[0]), int(pair[1])
        if i == j:
            raise SelfLoopError(f"edge ({i}, {j}) is a self-loop")
        if not (1 <= i <= n and 1 <= j <= n):
            raise EdgeIndexError(f"edge ({i}, {j}) outside the 1..{n} range")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdgeError(f"edge {key} listed more than once")
        seen.add(key)
        normalized.append(key)
        adjacency[key[0] - 1, key[1] - 1] = 1.0
        adjacency[key[1] - 1, key[0] - 1] = 1.0

    if not _connected(n, adjacency):
        raise DisconnectedGraphError(
            "graph is not connected; every agent must be reachable"
        )
    return Graph(n=n, edges=tuple(sorted(normalized)), adjacency=_read_only(adjacency))


def _connected(n: int, adjacency: np.ndarray) -> bool:
    # breadth-first search from agent 1
    visited = np.zeros(n, dtype=bool)
    visited[0] = True
    frontier = [0]
    while frontier:
        node = frontier.pop()
        for nb in np.flatnonzero(adjacency[node]):
            if not visited[nb]:
                visited[nb] = True
                frontier.append(int(nb))
    return bool(visited.all())


def cycle_graph(n: int) -> Graph:
    """Ring topology: agent i talks to its previous and next agent."""
    if n < 2:
        raise InvalidParameterError(f"cycle needs at least 2 agents, got {n}")
    if n == 2:
        return build_graph(2, [(1, 2)])
    return build_graph(n, [(i, i % n + 1) for i in range(1, n + 1)])


def complete_graph(n: int) -> Graph:
    """Every pair of agents connected."""
    if n < 2:
        raise InvalidParameterError(f"complete graph needs at least 2 agents, got {n}")
    return build_graph(n, [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)])


def random_connected_graph(n: int, edge_probability: float, seed: int) -> Graph:
    """Uniform random spanning tree plus independent extra edges.

    Seeding the tree guarantees connectivity, so no rejection loop is
    needed; identical seeds give identical graphs.
    """
    if n < 2:
        raise InvalidParameterError(f"random graph needs at least 2 agents, got {n}")
    if not 0.0 < edge_probability <= 1.0:
        raise InvalidParameterError(
            f"edge probability must be in (0, 1], got {edge_probability}"
        )
    rng = np.random.default_rng(seed)
    edges = set(_uniform_spanning_tree(n, rng))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if (i, j) not in edges and rng.random() < edge_probability:
                edges.add((i, j))
    return build_graph(n, sorted(edges))


def _uniform_spanning_tree(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    # decode a random Pruefer sequence; uniform over labeled trees
    if n == 2:
        return [(1, 2)]
    seq = [int(s) for s in rng.integers(1, n + 1, size=n - 2)]
    degree = [1] * (n + 1)
    for label in seq:
        degree[label] += 1
    edges = []
    leaves = [v for v in range(1, n + 1) if degree[v] == 1]
    heapq.heapify(leaves)
    for label in seq:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, label), max(leaf, label)))
        degree[label] -= 1
        if degree[label] == 1:
            heapq.heappush(leaves, label)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((min(u, v), max(u, v)))
    return edges


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenstructure of a connected graph Laplacian.

    ``basis`` is orthonormal with the normalized all-ones vector as its
    first column (``consensus_direction``); ``reduced_basis`` holds the
    remaining n-1 columns, spanning the disagreement subspace.
    ``sqrt_laplacian`` is the symmetric PSD square root.
    """

    laplacian: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray
    reduced_basis: np.ndarray
    sqrt_laplacian: np.ndarray

    @property
    def n(self) -> int:
        return self.laplacian.shape[0]

    @property
    def consensus_direction(self) -> np.ndarray:
        return self.basis[:, 0]

    @property
    def algebraic_connectivity(self) -> float:
        """Second-smallest Laplacian eigenvalue; positive iff connected."""
        return float(self.eigenvalues[1]) if self.n > 1 else 0.0


def spectral_decomposition(graph: Graph) -> SpectralDecomposition:
    """Eigendecompose the Laplacian and canonicalize the eigenbasis.

    The computed null eigenvector is replaced by the exact normalized
    all-ones direction, and the remaining columns are re-orthonormalized
    by a Gram-Schmidt pass in index order, which pins down the basis
    inside repeated eigenvalue groups.
    """
    lap = np.asarray(graph.laplacian, dtype=float)
    n = graph.n
    if n == 1:
        one = np.ones((1, 1))
        return SpectralDecomposition(
            laplacian=_read_only(lap.copy()),
            eigenvalues=_read_only(np.zeros(1)),
            basis=_read_only(one),
            reduced_basis=_read_only(np.zeros((1, 0))),
            sqrt_laplacian=_read_only(np.zeros((1, 1))),
        )

    try:
        eigvals, eigvecs = np.linalg.eigh(lap)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"Laplacian eigendecomposition failed: {exc}") from exc

    null_tol = _NULL_EIGENVALUE_REL_TOL * float(eigvals[-1])
    n_null = int(np.count_nonzero(np.abs(eigvals) < null_tol))
    if n_null != 1:
        raise DisconnectedGraphError(
            f"Laplacian has {n_null} null eigenvalues; expected exactly 1"
        )
    eigvals = eigvals.copy()
    eigvals[0] = 0.0

    direction = np.full(n, 1.0 / math.sqrt(n))
    columns: list[np.ndarray] = []
    for j in range(1, n):
        v = eigvecs[:, j] - direction * (direction @ eigvecs[:, j])
        for u in columns:
            v = v - u * (u @ v)
        norm = np.linalg.norm(v)
        if norm < 1e-8:
            raise EigensolverError(
                "eigenbasis collapsed during re-orthonormalization"
            )
        columns.append(v / norm)
    reduced = np.column_stack(columns)
    basis = np.column_stack([direction, reduced])

    sqrt_eigs = np.sqrt(np.clip(eigvals, 0.0, None))
    sqrt_lap = (basis * sqrt_eigs) @ basis.T
    sqrt_lap = 0.5 * (sqrt_lap + sqrt_lap.T)

    return SpectralDecomposition(
        laplacian=_read_only(lap.copy()),
        eigenvalues=_read_only(eigvals),
        basis=_read_only(basis),
        reduced_basis=_read_only(reduced),
        sqrt_laplacian=_read_only(sqrt_lap),
    )


def kron_identity(matrix, block_dim: int) -> np.ndarray:
    """Kronecker product ``matrix (x) I_d``, lifting agent-level operators
    to act blockwise on stacked d-dimensional vectors."""
    if block_dim < 1:
        raise InvalidParameterError(f"block dimension must be >= 1, got {block_dim}")
    return np.kron(np.asarray(matrix, dtype=float), np.eye(block_dim))
