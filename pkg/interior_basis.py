import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from complex_solver import SparseFactorization, factor_real, parallel_map
from errors import ConvergenceError, DimensionMismatchError, FactorizationError, SingularShiftError
from interface_eig import InterfaceBasis
from pencil_blocks import DDPencil

logger = logging.getLogger(__name__)

# Purpose: Interior part of the RF-DDES subspace, built independently per subdomain j:
#
#   V_j      eigenvectors of (B_j, M_B_j) with eigenvalues nearest the real shift sigma,
#   Sigma_j  [X_1, ..., X_psi] with X_1 = B_sigma_j^{-1} Phi_j, X_{t+1} = B_sigma_j^{-1} M_B_j X_t,
#   Gamma_j  the same recursion started from Psi_j (only when M_E is nonzero),
#
# where Phi_j = (E_hat_j - sigma M_E_hat_j) Q_j, Psi_j = M_E_hat_j Q_j and Q_j are the rows
# of the interface basis inside subdomain j's window. Everything is real arithmetic.

# Below this size (or when nearly all pairs are wanted) the dense solver is used.
DENSE_EIG_LIMIT = 200


@dataclass
class InteriorEigenspace:
    """Shift factorization and nearest eigenpairs of one subdomain."""

    factor: SparseFactorization
    V: np.ndarray  # d_j x nev_B_j, M_B-orthonormal
    delta: np.ndarray


@dataclass
class InteriorSubspace:
    sigma: float
    psi: int
    V: List[np.ndarray]
    delta: List[np.ndarray]
    Sigma: List[np.ndarray]  # d_j x psi*mu
    Gamma: Optional[List[np.ndarray]]  # None when M_E == 0

    @property
    def n_eigvecs(self) -> int:
        return int(sum(v.shape[1] for v in self.V))


def factor_shifted_interior(b_block: sp.spmatrix, mb_block: sp.spmatrix, sigma: float) -> SparseFactorization:
    """Real LU of B_sigma_j = B_j - sigma M_B_j.

    Raises:
        SingularShiftError: sigma coincides with an eigenvalue of (B_j, M_B_j).
    """
    try:
        return factor_real(sp.csc_matrix(b_block - sigma * mb_block), sigma)
    except FactorizationError as exc:
        raise SingularShiftError(sigma) from exc


def _rayleigh_ritz_interior(b_block, mb_block, vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    projected_b = vectors.T @ (b_block @ vectors)
    projected_m = vectors.T @ (mb_block @ vectors)
    values, coeffs = eigh(0.5 * (projected_b + projected_b.T), 0.5 * (projected_m + projected_m.T))
    return values, vectors @ coeffs


def smallest_eigs_B(b_block: sp.spmatrix, mb_block: sp.spmatrix, sigma: float, nev_b: int,
                    seed: int = 0, factor: Optional[SparseFactorization] = None) -> Tuple[np.ndarray, np.ndarray]:
    """The nev_b eigenpairs of (B_j, M_B_j) closest to sigma, ascending, M_B-orthonormal.

    Shift-invert Lanczos (ARPACK) for large blocks, dense eigh otherwise; a final
    Rayleigh-Ritz step makes V^T M_B V = I to rounding.
    """
    d = b_block.shape[0]
    if nev_b > d:
        logger.warning(f"nev_B={nev_b} exceeds the subdomain size d={d}; using {d}")
        nev_b = d
    if nev_b <= 0 or d == 0:
        return np.zeros((d, 0)), np.zeros(0)
    factor = factor if factor is not None else factor_shifted_interior(b_block, mb_block, sigma)

    if d <= DENSE_EIG_LIMIT or nev_b >= d - 1:
        values, vectors = eigh(sp.csr_matrix(b_block).toarray(), sp.csr_matrix(mb_block).toarray())
        nearest = np.argsort(np.abs(values - sigma), kind="stable")[:nev_b]
        nearest = np.sort(nearest)
        return vectors[:, nearest], values[nearest]

    op_inv = LinearOperator((d, d), matvec=factor.solve, dtype=np.float64)
    v0 = np.random.default_rng(seed).uniform(-1.0, 1.0, d)
    try:
        _, vectors = eigsh(sp.csr_matrix(b_block), k=nev_b, M=sp.csr_matrix(mb_block), sigma=sigma,
                           which="LM", OPinv=op_inv, v0=v0, maxiter=4 * nev_b + 100, tol=0)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"shift-invert Lanczos found {len(exc.eigenvalues)} of {nev_b} "
                               f"eigenpairs near sigma={sigma}") from exc
    values, vectors = _rayleigh_ritz_interior(b_block, mb_block, vectors)
    return vectors, values


def _window_rows(dd: DDPencil, j: int, basis: Union[InterfaceBasis, np.ndarray]) -> np.ndarray:
    q = basis.Q if isinstance(basis, InterfaceBasis) else np.asarray(basis)
    if q.shape[0] != dd.n_interface:
        raise DimensionMismatchError(f"interface basis has {q.shape[0]} rows, s={dd.n_interface}")
    return q[dd.meta.interface_slice(j)]


def compute_phi_psi(dd: DDPencil, j: int, sigma: float,
                    basis: Union[InterfaceBasis, np.ndarray]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Phi_j = (E_hat_j - sigma M_E_hat_j) Q_j and Psi_j = M_E_hat_j Q_j (None when M_E = 0)."""
    q_j = _window_rows(dd, j, basis)
    edge_sigma = dd.E_hat[j] - sigma * dd.M_E_hat[j]
    phi = np.asarray(edge_sigma @ q_j)
    psi = None if dd.m_e_is_zero else np.asarray(dd.M_E_hat[j] @ q_j)
    return phi, psi


def _krylov_blocks(factor: SparseFactorization, mb_block, start: np.ndarray, depth: int) -> np.ndarray:
    d, width = start.shape
    if width == 0 or d == 0:
        return np.zeros((d, depth * width))
    blocks = [factor.solve(start)]
    for _ in range(depth - 1):
        blocks.append(factor.solve(mb_block @ blocks[-1]))
    return np.hstack(blocks)


def resolvent_blocks(factor: SparseFactorization, mb_block: sp.spmatrix, phi: np.ndarray,
                     psi: Optional[np.ndarray], depth: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """(Sigma_j, Gamma_j): block t is (B_sigma^{-1} M_B)^{t-1} B_sigma^{-1} applied to Phi_j / Psi_j."""
    if depth < 1:
        raise ValueError(f"expansion depth psi must be >= 1, got {depth}")
    sigma_blocks = _krylov_blocks(factor, mb_block, phi, depth)
    gamma_blocks = None if psi is None else _krylov_blocks(factor, mb_block, psi, depth)
    return sigma_blocks, gamma_blocks


# --- Whole interior subspace --- #

def interior_eigenspaces(dd: DDPencil, sigma: float, nev_b: Sequence[int], seed: int = 0,
                         workers: int = 1) -> List[InteriorEigenspace]:
    """Factorization and nearest eigenpairs for every subdomain (independent across j)."""
    if len(nev_b) != dd.p:
        raise DimensionMismatchError(f"{len(nev_b)} nev_B values for p={dd.p} subdomains")

    def one(j: int) -> InteriorEigenspace:
        factor = factor_shifted_interior(dd.B[j], dd.M_B[j], sigma)
        vectors, values = smallest_eigs_B(dd.B[j], dd.M_B[j], sigma, nev_b[j], seed + j, factor)
        return InteriorEigenspace(factor=factor, V=vectors, delta=values)

    spaces = parallel_map(one, list(range(dd.p)), workers)
    logger.info(f"Interior eigenvectors per subdomain: {[space.V.shape[1] for space in spaces]} (sigma={sigma})")
    return spaces


def build_interior_subspace(dd: DDPencil, sigma: float, basis: Union[InterfaceBasis, np.ndarray], psi: int,
                            spaces: List[InteriorEigenspace], workers: int = 1) -> InteriorSubspace:
    def one(j: int):
        phi, psi_block = compute_phi_psi(dd, j, sigma, basis)
        return resolvent_blocks(spaces[j].factor, dd.M_B[j], phi, psi_block, psi)

    blocks = parallel_map(one, list(range(dd.p)), workers)
    return InteriorSubspace(
        sigma=sigma,
        psi=psi,
        V=[space.V for space in spaces],
        delta=[space.delta for space in spaces],
        Sigma=[block[0] for block in blocks],
        Gamma=None if dd.m_e_is_zero else [block[1] for block in blocks],
    )
