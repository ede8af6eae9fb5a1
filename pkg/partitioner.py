import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse import csgraph
from scipy.sparse.csgraph import shortest_path
from scipy.sparse.linalg import eigsh

from errors import DimensionMismatchError, PartitionError

logger = logging.getLogger(__name__)

# Purpose: Splits the adjacency graph of |A|+|M| into p non-overlapping subdomains by
# recursive spectral bisection (Fiedler vector of the graph Laplacian, with a
# breadth-first level-set fallback for disconnected pieces), marks interface vertices,
# and builds the permutation that puts the pencil into arrowhead form: interior
# vertices of subdomain 0, ..., p-1 first, then interface vertices grouped by subdomain.
#
# Graphs are symmetric scipy CSR matrices with unit weights and an empty diagonal.
# Subdomain labels are 0-based.

# Subgraphs up to this size get the Fiedler vector from a dense eigensolve.
DENSE_FIEDLER_CAP = 400


@dataclass(frozen=True)
class PartitionMeta:
    p: int
    labels: np.ndarray
    is_interface: np.ndarray
    perm: np.ndarray  # perm[new] = old
    iperm: np.ndarray  # iperm[old] = new
    d: np.ndarray  # interior count per subdomain
    s: np.ndarray  # interface count per subdomain

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def n_interior(self) -> int:
        return int(self.d.sum())

    @property
    def n_interface(self) -> int:
        return int(self.s.sum())

    @property
    def interior_offsets(self) -> np.ndarray:
        """Start row of each subdomain's interior block (length p + 1)."""
        return np.concatenate(([0], np.cumsum(self.d)))

    @property
    def interface_offsets(self) -> np.ndarray:
        """l_j = sum_{k<j} s_k, local to the interface block (length p + 1)."""
        return np.concatenate(([0], np.cumsum(self.s)))

    def interior_slice(self, j: int) -> slice:
        offsets = self.interior_offsets
        return slice(int(offsets[j]), int(offsets[j + 1]))

    def interface_slice(self, j: int) -> slice:
        offsets = self.interface_offsets
        return slice(int(offsets[j]), int(offsets[j + 1]))

    def trailing_interface(self, j: int) -> int:
        """nu_j = s - l_j - s_j."""
        return int(self.n_interface - self.interface_offsets[j] - self.s[j])

    def stats(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "d": self.d.tolist(),
            "s": self.s.tolist(),
            "s_total": self.n_interface,
            "s_over_n": self.n_interface / self.n if self.n else 0.0,
        }


def build_adjacency(a_matrix: sp.spmatrix, m_matrix: sp.spmatrix) -> sp.csr_matrix:
    """Pattern graph of |A|+|M|: edge (i, j), i != j, iff A_ij != 0 or M_ij != 0."""
    if a_matrix.shape != m_matrix.shape:
        raise DimensionMismatchError(f"A is {a_matrix.shape} but M is {m_matrix.shape}")
    union = (abs(sp.csr_matrix(a_matrix)) + abs(sp.csr_matrix(m_matrix))).tocsr()
    union.setdiag(0)
    union.eliminate_zeros()
    graph = sp.csr_matrix((np.ones(union.nnz, dtype=np.int8), union.indices, union.indptr), shape=union.shape)
    graph.sort_indices()
    return graph


def _bfs_levels(graph: sp.csr_matrix, start: int) -> np.ndarray:
    return shortest_path(graph, method="D", directed=False, unweighted=True, indices=start)


def _pseudo_peripheral(graph: sp.csr_matrix, start: int) -> tuple:
    """Repeated BFS towards the farthest vertex until the eccentricity stops growing."""
    degrees = np.diff(graph.indptr)
    levels = _bfs_levels(graph, start)
    eccentricity = np.max(levels[np.isfinite(levels)])
    current = start
    for _ in range(graph.shape[0]):
        far = np.flatnonzero(levels == eccentricity)
        candidate = int(far[np.lexsort((far, degrees[far]))[0]])
        candidate_levels = _bfs_levels(graph, candidate)
        candidate_ecc = np.max(candidate_levels[np.isfinite(candidate_levels)])
        if candidate_ecc <= eccentricity:
            break
        current, levels, eccentricity = candidate, candidate_levels, candidate_ecc
    return current, levels


def _fiedler_vector(subgraph: sp.csr_matrix, rng: np.random.Generator) -> np.ndarray:
    """Eigenvector of the second smallest eigenvalue of the graph Laplacian.

    The sign is fixed so that the first nonzero entry is negative.
    """
    laplacian = csgraph.laplacian(subgraph.astype(np.float64))
    size = subgraph.shape[0]
    if size <= DENSE_FIEDLER_CAP:
        _, vectors = eigh(laplacian.toarray(), subset_by_index=[0, 1])
        fiedler = vectors[:, 1]
    else:
        # L is singular; shift just below zero so that L - sigma*I factors
        sigma = -1e-8 * max(float(laplacian.diagonal().max()), 1.0)
        v0 = rng.uniform(-1.0, 1.0, size)
        values, vectors = eigsh(laplacian.tocsc(), k=2, sigma=sigma, which="LM", v0=v0,
                                ncv=min(size - 1, 20), tol=1e-10)
        fiedler = vectors[:, int(np.argsort(values)[1])]
    nonzero = np.flatnonzero(np.abs(fiedler) > 1e-12 * np.abs(fiedler).max())
    if nonzero.size and fiedler[nonzero[0]] > 0:
        fiedler = -fiedler
    return fiedler


def _bisect(graph: sp.csr_matrix, vertices: np.ndarray, k_left: int, k: int,
            rng: np.random.Generator) -> tuple:
    """Splits `vertices` into k_left/k and (k - k_left)/k of its size.

    Connected sets are ordered by the Fiedler vector, which cuts grids along a straight
    line. Disconnected sets fall back to BFS levels from a pseudo-peripheral vertex,
    which keeps each component together where possible.
    """
    subgraph = graph[vertices][:, vertices]
    n_components, _ = csgraph.connected_components(subgraph, directed=False)
    if n_components == 1 and vertices.size > 2:
        key = _fiedler_vector(subgraph, rng)
    else:
        start = int(rng.integers(vertices.size))
        # unreachable vertices have level inf and go last
        _, key = _pseudo_peripheral(subgraph, start)
    order = np.lexsort((np.arange(vertices.size), key))
    n_left = int(round(k_left / k * vertices.size))
    n_left = min(max(n_left, k_left), vertices.size - (k - k_left))
    return vertices[np.sort(order[:n_left])], vertices[np.sort(order[n_left:])]


def partition_graph(graph: sp.csr_matrix, p: int, seed: int = 0) -> np.ndarray:
    """Labels every vertex with a subdomain id in 0..p-1.

    Recursive bisection: a set destined for k parts is split into floor(k/2) and
    ceil(k/2) parts with sizes proportional to the part counts.

    Raises:
        PartitionError: p < 1 or p > n.
    """
    n = graph.shape[0]
    if p < 1:
        raise PartitionError(f"p must be >= 1, got {p}")
    if p > n:
        raise PartitionError(f"cannot split {n} vertices into {p} subdomains")

    rng = np.random.default_rng(seed)
    labels = np.empty(n, dtype=np.int64)
    parts: List[np.ndarray] = []

    def split(vertices: np.ndarray, k: int) -> None:
        if k == 1:
            parts.append(vertices)
            return
        k_left = k // 2
        left, right = _bisect(graph, vertices, k_left, k, rng)
        split(left, k_left)
        split(right, k - k_left)

    split(np.arange(n), p)
    for label, vertices in enumerate(parts):
        labels[vertices] = label
    logger.debug(f"Partitioned {n} vertices into sizes {[part.size for part in parts]}")
    return labels


def classify_and_permute(graph: sp.csr_matrix, labels: np.ndarray) -> PartitionMeta:
    """Marks interface vertices and builds the arrowhead permutation (stable within groups)."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    p = int(labels.max()) + 1 if n else 0

    coo = graph.tocoo()
    crossing = labels[coo.row] != labels[coo.col]
    is_interface = np.zeros(n, dtype=bool)
    is_interface[coo.row[crossing]] = True

    perm = np.lexsort((np.arange(n), labels, is_interface))
    iperm = np.empty(n, dtype=np.int64)
    iperm[perm] = np.arange(n)

    d = np.bincount(labels[~is_interface], minlength=p)
    s = np.bincount(labels[is_interface], minlength=p)
    meta = PartitionMeta(p=p, labels=labels, is_interface=is_interface, perm=perm,
                         iperm=iperm, d=d, s=s)
    logger.info(f"Partition: p={p}, d={d.tolist()}, s={s.tolist()}, s/n={meta.n_interface / max(n, 1):.4f}")
    return meta


def partition_pencil(a_matrix: sp.spmatrix, m_matrix: sp.spmatrix, p: int = 2, seed: int = 0) -> PartitionMeta:
    """build_adjacency -> partition_graph -> classify_and_permute."""
    graph = build_adjacency(a_matrix, m_matrix)
    return classify_and_permute(graph, partition_graph(graph, p, seed))
