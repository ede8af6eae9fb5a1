import numpy as np
import pytest
import scipy.sparse as sp

from errors import DimensionMismatchError, PartitionError
from partitioner import build_adjacency, classify_and_permute, partition_graph, partition_pencil
from sparse_core import gen_fd_laplacian, random_sparse_pencil

# Purpose: Tests for graph construction, recursive bisection and the arrowhead ordering.


def test_adjacency_is_the_off_diagonal_pattern(fd_pencil):
    a_matrix, m_matrix = fd_pencil

    graph = build_adjacency(a_matrix, m_matrix)

    assert graph.diagonal().sum() == 0
    assert (graph != graph.T).nnz == 0
    # 5-point stencil: nnz(A) minus the diagonal
    assert graph.nnz == a_matrix.nnz - a_matrix.shape[0]


def test_adjacency_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        build_adjacency(gen_fd_laplacian(2, 2), gen_fd_laplacian(3, 1))


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_partition_labels_cover_every_part(fd_pencil, p):
    """Every vertex gets a label in 0..p-1 and no part is empty."""
    graph = build_adjacency(*fd_pencil)

    labels = partition_graph(graph, p, seed=0)

    assert labels.shape == (120,)
    assert set(np.unique(labels).tolist()) == set(range(p))


def test_bisection_sizes_are_proportional(fd_pencil):
    graph = build_adjacency(*fd_pencil)

    assert np.bincount(partition_graph(graph, 2)).tolist() == [60, 60]
    assert np.bincount(partition_graph(graph, 4)).tolist() == [30, 30, 30, 30]


def test_partition_is_deterministic_for_a_seed(fd_pencil):
    graph = build_adjacency(*fd_pencil)
    assert np.array_equal(partition_graph(graph, 3, seed=5), partition_graph(graph, 3, seed=5))


def test_partition_rejects_bad_part_counts():
    graph = build_adjacency(*random_sparse_pencil(2, 2, seed=0))
    with pytest.raises(PartitionError):
        partition_graph(graph, 0)
    with pytest.raises(PartitionError):
        partition_graph(graph, 5)


def test_interior_vertices_only_touch_their_own_subdomain(random_pencil):
    """An interior vertex has no neighbour with another label."""
    # Arrange
    graph = build_adjacency(*random_pencil)
    labels = partition_graph(graph, 3, seed=1)

    # Act
    meta = classify_and_permute(graph, labels)

    # Assert
    coo = graph.tocoo()
    interior_rows = ~meta.is_interface[coo.row]
    assert np.all(labels[coo.row[interior_rows]] == labels[coo.col[interior_rows]])
    assert meta.d.sum() + meta.s.sum() == meta.n


def test_permutation_has_arrowhead_order(random_pencil):
    """Interior vertices by subdomain come first, then interface vertices by subdomain."""
    meta = partition_pencil(*random_pencil, p=3, seed=1)

    assert np.array_equal(np.sort(meta.perm), np.arange(meta.n))
    assert np.array_equal(meta.perm[meta.iperm], np.arange(meta.n))

    permuted_labels = meta.labels[meta.perm]
    permuted_interface = meta.is_interface[meta.perm]
    assert not permuted_interface[:meta.n_interior].any()
    assert permuted_interface[meta.n_interior:].all()
    for j in range(meta.p):
        assert np.all(permuted_labels[meta.interior_slice(j)] == j)
        window = meta.interface_slice(j)
        assert np.all(permuted_labels[meta.n_interior + window.start:meta.n_interior + window.stop] == j)


def test_single_subdomain_has_no_interface(fd_pencil):
    meta = partition_pencil(*fd_pencil, p=1)

    assert meta.n_interface == 0
    assert meta.d.tolist() == [120]


def test_stats_report_sizes(fd_pencil):
    stats = partition_pencil(*fd_pencil, p=2).stats()

    assert stats["p"] == 2
    assert stats["n"] == 120
    assert sum(stats["d"]) + stats["s_total"] == 120
    assert stats["s_over_n"] == pytest.approx(stats["s_total"] / 120)
    assert stats["s_total"] > 0


def test_trailing_interface_counts(random_pencil):
    meta = partition_pencil(*random_pencil, p=3, seed=1)
    for j in range(meta.p):
        assert meta.interface_offsets[j] + meta.s[j] + meta.trailing_interface(j) == meta.n_interface


# --- Separator shape --- #

@pytest.mark.parametrize("nx, ny", [(12, 10), (40, 38)])
def test_rectangular_grid_is_cut_straight(nx: int, ny: int):
    """Bisection of an nx x ny grid (nx > ny) splits between two full columns."""
    # Arrange
    a_matrix = gen_fd_laplacian(nx, ny)
    graph = build_adjacency(a_matrix, a_matrix)

    # Act
    meta = classify_and_permute(graph, partition_graph(graph, 2, seed=0))

    # Assert
    grid_labels = meta.labels.reshape(ny, nx)
    column_labels = grid_labels[0]
    assert np.all(grid_labels == column_labels)
    assert np.all(column_labels[:nx // 2] == column_labels[0])
    assert np.all(column_labels[nx // 2:] != column_labels[0])
    grid_interface = meta.is_interface.reshape(ny, nx)
    assert np.flatnonzero(grid_interface.any(axis=0)).tolist() == [nx // 2 - 1, nx // 2]
    assert meta.s.tolist() == [ny, ny]


def test_path_graph_splits_at_the_midpoint():
    a_matrix = gen_fd_laplacian(10, 1)
    graph = build_adjacency(a_matrix, a_matrix)

    labels = partition_graph(graph, 2, seed=3)

    assert labels[:5].tolist() == [labels[0]] * 5
    assert np.all(labels[5:] != labels[0])


def test_disconnected_graph_keeps_components_together():
    """Two separate 3 x 3 grids: BFS ordering puts one whole grid on each side."""
    block = gen_fd_laplacian(3, 3)
    two = sp.block_diag([block, block], format="csr")
    graph = build_adjacency(two, two)

    labels = partition_graph(graph, 2, seed=0)

    assert len(set(labels[:9].tolist())) == 1
    assert len(set(labels[9:].tolist())) == 1
    assert labels[0] != labels[9]
