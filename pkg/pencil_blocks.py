import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.sparse as sp

from errors import DimensionMismatchError, StructureError
from partitioner import PartitionMeta

logger = logging.getLogger(__name__)

# Purpose: Materializes the blocks of the reordered pencil
#
#       A = [ B   E ]      M = [ M_B    M_E ]
#           [ E^T C ]          [ M_E^T  M_C ]
#
# with B, M_B block diagonal over subdomains and E_j = [0, E_hat_j, 0] (likewise M_E_j)
# nonzero only in the subdomain's interface column window. Blocks are kept per subdomain
# so each one can be factored independently.


@dataclass(frozen=True)
class DDPencil:
    meta: PartitionMeta
    B: List[sp.csr_matrix]
    M_B: List[sp.csr_matrix]
    E_hat: List[sp.csr_matrix]  # d_j x s_j, local window columns
    M_E_hat: List[sp.csr_matrix]
    C: sp.csr_matrix
    M_C: sp.csr_matrix
    m_e_is_zero: bool

    @property
    def p(self) -> int:
        return self.meta.p

    @property
    def n_interface(self) -> int:
        return self.meta.n_interface

    def coupling(self, mass: bool = False) -> sp.csr_matrix:
        """Global d x s block E (or M_E); windows are contiguous so it is block diagonal."""
        blocks = self.M_E_hat if mass else self.E_hat
        return _block_diag(blocks, self.meta.d, self.meta.s)

    def interior(self, mass: bool = False) -> sp.csr_matrix:
        """Global d x d block B (or M_B)."""
        blocks = self.M_B if mass else self.B
        return _block_diag(blocks, self.meta.d, self.meta.d)


@dataclass(frozen=True)
class ShiftedBlocks:
    zeta: complex
    B: List[sp.csr_matrix]
    E_hat: List[sp.csr_matrix]
    C: sp.csr_matrix


def _block_diag(blocks: List[sp.spmatrix], rows: np.ndarray, cols: np.ndarray) -> sp.csr_matrix:
    # Assembled through COO offsets so that empty (0 x k) blocks are allowed.
    row_offsets = np.concatenate(([0], np.cumsum(rows)))
    col_offsets = np.concatenate(([0], np.cumsum(cols)))
    pieces = [sp.coo_matrix(block) for block in blocks]
    data = [piece.data for piece in pieces]
    row_index = [piece.row + row_offsets[k] for k, piece in enumerate(pieces)]
    col_index = [piece.col + col_offsets[k] for k, piece in enumerate(pieces)]
    shape = (int(row_offsets[-1]), int(col_offsets[-1]))
    if not pieces:
        return sp.csr_matrix(shape)
    return sp.coo_matrix((np.concatenate(data), (np.concatenate(row_index), np.concatenate(col_index))),
                         shape=shape).tocsr()


def permute(matrix: sp.spmatrix, meta: PartitionMeta) -> sp.csr_matrix:
    """P X P^T with perm[new] = old."""
    csr = sp.csr_matrix(matrix)
    return csr[meta.perm][:, meta.perm].tocsr()


def _split_one(permuted: sp.csr_matrix, meta: PartitionMeta, label: str) -> tuple:
    d_total = meta.n_interior
    interior, window = [], []
    for j in range(meta.p):
        rows = meta.interior_slice(j)
        cols = meta.interface_slice(j)
        strip = permuted[rows]
        block = strip[:, rows].tocsr()
        edge = strip[:, d_total + cols.start:d_total + cols.stop].tocsr()
        strip.eliminate_zeros()
        block.eliminate_zeros()
        edge.eliminate_zeros()
        if strip.nnz != block.nnz + edge.nnz:
            raise StructureError(
                f"{label}: interior rows of subdomain {j} couple outside their window "
                f"({strip.nnz - block.nnz - edge.nnz} stray entries)"
            )
        interior.append(block)
        window.append(edge)
    corner = permuted[d_total:, d_total:].tocsr()
    return interior, window, corner


def split_blocks(a_matrix: sp.spmatrix, m_matrix: sp.spmatrix, meta: PartitionMeta) -> DDPencil:
    """Extracts B_j, E_hat_j, M_B_j, M_E_hat_j, C, M_C from the permuted pencil.

    Raises:
        DimensionMismatchError: A, M and the partition disagree in size.
        StructureError: an interior row has a nonzero outside its window (partitioner bug).
    """
    if a_matrix.shape != m_matrix.shape or a_matrix.shape[0] != meta.n:
        raise DimensionMismatchError(f"pencil {a_matrix.shape}/{m_matrix.shape} vs partition of {meta.n}")

    b_blocks, e_blocks, c_block = _split_one(permute(a_matrix, meta), meta, "A")
    mb_blocks, me_blocks, mc_block = _split_one(permute(m_matrix, meta), meta, "M")
    m_e_is_zero = all(block.nnz == 0 for block in me_blocks)
    logger.debug(f"Split pencil: p={meta.p}, s={meta.n_interface}, M_E zero={m_e_is_zero}")
    return DDPencil(meta=meta, B=b_blocks, M_B=mb_blocks, E_hat=e_blocks, M_E_hat=me_blocks,
                    C=c_block, M_C=mc_block, m_e_is_zero=m_e_is_zero)


def shifted_blocks(dd: DDPencil, zeta: complex) -> ShiftedBlocks:
    """B_zeta_j = B_j - zeta M_B_j, E_zeta_j = E_hat_j - zeta M_E_hat_j, C_zeta = C - zeta M_C."""
    zeta = complex(zeta)
    return ShiftedBlocks(
        zeta=zeta,
        B=[(b - zeta * mb).tocsr() for b, mb in zip(dd.B, dd.M_B)],
        E_hat=[(e - zeta * me).tocsr() for e, me in zip(dd.E_hat, dd.M_E_hat)],
        C=(dd.C - zeta * dd.M_C).tocsr(),
    )


def reassemble(dd: DDPencil, mass: bool = False) -> sp.csr_matrix:
    """Arrowhead matrix rebuilt from the blocks (permuted ordering)."""
    interior = dd.interior(mass)
    corner = dd.M_C if mass else dd.C
    if dd.meta.n_interface == 0:
        return interior
    if dd.meta.n_interior == 0:
        return sp.csr_matrix(corner)
    coupling = dd.coupling(mass)
    return sp.bmat([[interior, coupling], [coupling.T, corner]], format="csr")
