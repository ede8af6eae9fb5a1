import numpy as np
import pytest

from errors import DimensionMismatchError, StructureError
from partitioner import PartitionMeta, partition_pencil
from pencil_blocks import permute, reassemble, shifted_blocks, split_blocks
from sparse_core import gen_fd_laplacian, random_sparse_pencil

# Purpose: Tests for block extraction from the reordered pencil.


def test_blocks_reassemble_to_the_permuted_pencil(random_pencil, random_dd):
    """B, E, C (and the mass blocks) put back together give P A P^T exactly."""
    a_matrix, m_matrix = random_pencil
    meta = random_dd.meta

    assert np.array_equal(reassemble(random_dd).toarray(), permute(a_matrix, meta).toarray())
    assert np.array_equal(reassemble(random_dd, mass=True).toarray(), permute(m_matrix, meta).toarray())


def test_block_shapes_follow_the_partition(random_dd):
    meta = random_dd.meta
    for j in range(meta.p):
        assert random_dd.B[j].shape == (meta.d[j], meta.d[j])
        assert random_dd.E_hat[j].shape == (meta.d[j], meta.s[j])
    assert random_dd.C.shape == (meta.n_interface, meta.n_interface)
    assert random_dd.coupling().shape == (meta.n_interior, meta.n_interface)
    assert random_dd.interior(mass=True).shape == (meta.n_interior, meta.n_interior)


def test_mass_coupling_flag(random_dd, fd_dd):
    """Identity mass has no interior-interface coupling; the random mass has some."""
    assert fd_dd.m_e_is_zero
    assert not random_dd.m_e_is_zero


def test_shifted_blocks(random_dd):
    zeta = 0.3 + 0.7j

    shifted = shifted_blocks(random_dd, zeta)

    expected = random_dd.B[0].toarray() - zeta * random_dd.M_B[0].toarray()
    assert np.allclose(shifted.B[0].toarray(), expected)
    assert np.allclose(shifted.C.toarray(), random_dd.C.toarray() - zeta * random_dd.M_C.toarray())


def test_split_rejects_size_mismatch(random_dd):
    a_matrix, m_matrix = random_sparse_pencil(3, 3, seed=0)
    with pytest.raises(DimensionMismatchError):
        split_blocks(a_matrix, m_matrix, random_dd.meta)


def test_split_detects_broken_arrowhead():
    """Two labels but no interface vertices: interior rows leak into the other subdomain."""
    # Arrange: a path of 4 vertices cut in the middle without marking the cut
    a_matrix = gen_fd_laplacian(4, 1)
    meta = PartitionMeta(p=2, labels=np.array([0, 0, 1, 1]), is_interface=np.zeros(4, dtype=bool),
                         perm=np.arange(4), iperm=np.arange(4), d=np.array([2, 2]), s=np.array([0, 0]))

    # Act & Assert
    with pytest.raises(StructureError):
        split_blocks(a_matrix, a_matrix, meta)


def test_single_subdomain_reassembles(fd_pencil):
    a_matrix, m_matrix = fd_pencil
    meta = partition_pencil(a_matrix, m_matrix, p=1)

    dd = split_blocks(a_matrix, m_matrix, meta)

    assert dd.n_interface == 0
    assert np.array_equal(reassemble(dd).toarray(), permute(a_matrix, meta).toarray())
