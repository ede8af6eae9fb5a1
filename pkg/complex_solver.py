import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import splu

from errors import DimensionMismatchError, FactorizationError
from pencil_blocks import DDPencil, shifted_blocks
from rational_filter import RationalFilter

logger = logging.getLogger(__name__)

# Purpose: Direct solvers for the shifted systems behind every filtered operator.
#
#   * sparse LU (SuperLU through scipy.sparse.linalg.splu) of B_zeta_j and A - zeta M,
#   * dense Schur complements S_zeta = C_zeta - sum_j E_hat_zeta_j^T B_zeta_j^{-1} E_hat_zeta_j
#     and their dense LU,
#   * the two filtered operators
#         2 Re sum_l w_l (A - zeta_l M)^{-1} M v      (full pencil)
#         Re sum_l w_l S_zeta_l^{-1} q                (interface only).
#
# A - zeta M is complex symmetric, so the Schur complement is built with plain
# transposes. Completed factorizations are read-only and safe to share across threads.

# Fill-reducing ordering for structurally symmetric matrices.
PERMC_SPEC = "MMD_AT_PLUS_A"


class SparseFactorization:
    """LU handle for one sparse matrix K = X - shift*Y; supports multi-RHS solves."""

    def __init__(self, matrix: sp.spmatrix, shift: complex = 0.0):
        csc = sp.csc_matrix(matrix)
        if csc.shape[0] != csc.shape[1]:
            raise DimensionMismatchError(f"cannot factor a non-square matrix of shape {csc.shape}")
        self.shift = shift
        self.n = csc.shape[0]
        self.dtype = csc.dtype
        self._lu = None
        if self.n == 0:
            return
        try:
            self._lu = splu(csc, permc_spec=PERMC_SPEC)
        except RuntimeError as exc:
            raise FactorizationError(shift, str(exc)) from exc

    @property
    def is_complex(self) -> bool:
        return np.issubdtype(self.dtype, np.complexfloating)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        if rhs.shape[0] != self.n:
            raise DimensionMismatchError(f"right-hand side has {rhs.shape[0]} rows, factor has {self.n}")
        if self.n == 0:
            return np.zeros(rhs.shape, dtype=np.result_type(self.dtype, rhs.dtype))
        if np.iscomplexobj(rhs) and not self.is_complex:
            return self._lu.solve(np.ascontiguousarray(rhs.real)) + 1j * self._lu.solve(
                np.ascontiguousarray(rhs.imag))
        return self._lu.solve(np.ascontiguousarray(rhs, dtype=self.dtype))


class ComplexFactorization(SparseFactorization):
    """Factorization of a complex symmetric matrix, typically B_j - zeta M_B_j or A - zeta M."""

    def __init__(self, matrix: sp.spmatrix, shift: complex = 0.0):
        super().__init__(sp.csc_matrix(matrix, dtype=np.complex128), complex(shift))


class DenseFactorization:
    """Dense LU of a Schur complement."""

    def __init__(self, matrix: np.ndarray, shift: complex = 0.0):
        self.shift = shift
        self.n = matrix.shape[0]
        self._lu = None
        if self.n == 0:
            return
        lu, piv = lu_factor(matrix, check_finite=True)
        if np.any(np.diag(lu) == 0):
            raise FactorizationError(shift, "Schur complement is exactly singular")
        self._lu = (lu, piv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        if self.n == 0:
            return np.zeros(rhs.shape, dtype=np.complex128)
        return lu_solve(self._lu, rhs)


def factor_complex(matrix: sp.spmatrix, shift: complex = 0.0) -> ComplexFactorization:
    """Raises FactorizationError naming the shift on a singular pivot."""
    return ComplexFactorization(matrix, shift)


def factor_real(matrix: sp.spmatrix, shift: float = 0.0) -> SparseFactorization:
    return SparseFactorization(sp.csc_matrix(matrix, dtype=np.float64), shift)


def parallel_map(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


def factor_pencil_shifts(a_matrix: sp.spmatrix, m_matrix: sp.spmatrix, f: RationalFilter,
                         workers: int = 1) -> List[ComplexFactorization]:
    """One factorization of A - zeta_l M per quadrature node, in node order."""
    a_csr, m_csr = sp.csr_matrix(a_matrix), sp.csr_matrix(m_matrix)
    facts = parallel_map(lambda zeta: factor_complex(a_csr - zeta * m_csr, zeta), list(f.poles), workers)
    logger.info(f"Factored A - zeta M at {len(facts)} nodes (n={a_csr.shape[0]})")
    return facts


# --- Schur complements --- #

def form_schur(dd: DDPencil, zeta: complex,
               b_facts: Optional[List[SparseFactorization]] = None) -> np.ndarray:
    """Dense S_zeta; each subdomain updates only its own interface window."""
    zeta = complex(zeta)
    shifted = shifted_blocks(dd, zeta)
    schur = shifted.C.toarray().astype(np.complex128)
    offsets = dd.meta.interface_offsets
    for j in range(dd.p):
        edge = shifted.E_hat[j]
        if edge.shape[0] == 0 or edge.shape[1] == 0:
            continue
        fact = b_facts[j] if b_facts is not None else factor_complex(shifted.B[j], zeta)
        coupled = fact.solve(edge.toarray())
        window = slice(int(offsets[j]), int(offsets[j + 1]))
        schur[window, window] -= edge.T @ coupled
    # symmetric up to rounding
    return 0.5 * (schur + schur.T)


@dataclass
class SchurSet:
    """Per-node Schur complements, their dense LU and the subdomain factorizations."""

    poles: np.ndarray
    schur: List[np.ndarray]
    schur_factors: List[DenseFactorization]
    b_factors: List[List[ComplexFactorization]]  # [node][subdomain]

    @property
    def s(self) -> int:
        return self.schur[0].shape[0] if self.schur else 0

    @property
    def n_nodes(self) -> int:
        return len(self.schur)


def build_schur_set(dd: DDPencil, f: RationalFilter, workers: int = 1) -> SchurSet:
    """Factors B_zeta_j for every (node, subdomain) pair, then forms and factors S_zeta."""
    poles = list(f.poles)
    pairs = [(ell, j) for ell in range(len(poles)) for j in range(dd.p)]

    def factor_pair(pair):
        ell, j = pair
        zeta = poles[ell]
        return factor_complex(dd.B[j] - zeta * dd.M_B[j], zeta)

    flat = parallel_map(factor_pair, pairs, workers)
    b_factors = [flat[ell * dd.p:(ell + 1) * dd.p] for ell in range(len(poles))]

    def schur_node(ell):
        schur = form_schur(dd, poles[ell], b_factors[ell])
        return schur, DenseFactorization(schur, poles[ell])

    nodes = parallel_map(schur_node, list(range(len(poles))), workers)
    logger.info(f"Built {len(poles)} Schur complements of size s={dd.n_interface} "
                f"from {len(pairs)} subdomain factorizations")
    return SchurSet(poles=np.asarray(poles), schur=[node[0] for node in nodes],
                    schur_factors=[node[1] for node in nodes], b_factors=b_factors)


# --- Filtered operators --- #

def apply_filtered_resolvent_full(facts: List[SparseFactorization], f: RationalFilter,
                                  m_matrix: sp.spmatrix, v: np.ndarray) -> np.ndarray:
    """w = 2 Re sum_l w_l (A - zeta_l M)^{-1} M v (vector or block)."""
    if len(facts) != f.n_nodes:
        raise DimensionMismatchError(f"{len(facts)} factorizations for {f.n_nodes} quadrature nodes")
    mv = m_matrix @ np.asarray(v, dtype=np.float64)
    acc = np.zeros(mv.shape, dtype=np.complex128)
    for fact, weight in zip(facts, f.weights):
        acc += weight * fact.solve(mv)
    return 2.0 * acc.real


def apply_filtered_schur(ss: SchurSet, f: RationalFilter, q: np.ndarray) -> np.ndarray:
    """w = Re sum_l w_l S_zeta_l^{-1} q (vector or block of length s)."""
    if ss.n_nodes != f.n_nodes or not np.allclose(ss.poles, f.poles):
        raise DimensionMismatchError("Schur set was built for a different filter")
    q = np.asarray(q, dtype=np.float64)
    if q.shape[0] != ss.s:
        raise DimensionMismatchError(f"interface vector has length {q.shape[0]}, expected {ss.s}")
    acc = np.zeros(q.shape, dtype=np.complex128)
    for fact, weight in zip(ss.schur_factors, f.weights):
        acc += weight * fact.solve(q)
    return acc.real
