import logging
import time
from contextlib import contextmanager
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, qr

from complex_solver import build_schur_set
from errors import DimensionMismatchError, PhaseError
from interface_eig import interface_lanczos
from interior_basis import build_interior_subspace, interior_eigenspaces
from models import EigResult, RfDdesConfig
from partitioner import PartitionMeta, partition_pencil
from pencil_blocks import permute, split_blocks
from rational_filter import make_filter
from sparse_core import residual_norms

logger = logging.getLogger(__name__)

# Purpose: RF-DDES driver. Reorders the pencil into arrowhead form, computes the interior
# eigenvectors of every subdomain, the filtered interface basis Q, and the resolvent
# expansion blocks, assembles the projection matrix
#
#            [ blockdiag(V_j) | -Sigma              | Gamma ]   interior rows
#       Z =  [       0        |  Q  0_{s,(psi-1)mu} |   0   ]   interface rows
#
# (the Gamma column block only when M_E != 0), runs Rayleigh-Ritz on (A, M) and returns
# the Ritz pairs inside [alpha, beta] in the original variable ordering.

PHASES = ("partition", "interior", "schur", "interface", "projection", "rayleigh_ritz")

# Pivoted-QR columns with |R_ii| below this fraction of |R_00| are dropped.
RANK_TOL = 1e-12


@contextmanager
def phase(name: str, timings: Dict[str, float]):
    """Times one pipeline phase and tags any failure with the phase name."""
    started = time.perf_counter()
    try:
        yield
    except PhaseError:
        raise
    except Exception as exc:
        logger.error(f"RF-DDES phase '{name}' failed: {exc}")
        raise PhaseError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - started


def assemble_Z(meta: PartitionMeta, V: List[np.ndarray], Sigma: List[np.ndarray],
               Gamma: Optional[List[np.ndarray]], Q: np.ndarray, psi: int) -> np.ndarray:
    """Projection basis in the permuted ordering; dim = sum_j nev_B_j + psi*mu (+ psi*mu)."""
    n, d_total, s = meta.n, meta.n_interior, meta.n_interface
    mu = Q.shape[1]
    if Q.shape[0] != s:
        raise DimensionMismatchError(f"Q has {Q.shape[0]} rows, s={s}")
    if len(V) != meta.p or len(Sigma) != meta.p or (Gamma is not None and len(Gamma) != meta.p):
        raise DimensionMismatchError(f"per-subdomain blocks do not match p={meta.p}")

    k_offsets = np.concatenate(([0], np.cumsum([v.shape[1] for v in V])))
    k_total = int(k_offsets[-1])
    width = psi * mu
    dim = k_total + width + (width if Gamma is not None else 0)
    z = np.zeros((n, dim))

    for j in range(meta.p):
        rows = meta.interior_slice(j)
        if V[j].shape[0] != rows.stop - rows.start or Sigma[j].shape != (rows.stop - rows.start, width):
            raise DimensionMismatchError(f"subdomain {j}: blocks do not match d_j={rows.stop - rows.start}")
        z[rows, k_offsets[j]:k_offsets[j + 1]] = V[j]
        z[rows, k_total:k_total + width] = -Sigma[j]
        if Gamma is not None:
            z[rows, k_total + width:] = Gamma[j]
    z[d_total:, k_total:k_total + mu] = Q
    return z


def rayleigh_ritz(a_matrix: sp.spmatrix, m_matrix: sp.spmatrix, z: np.ndarray,
                  interval: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Ritz pairs of (A, M) on span(Z) inside the interval; vectors M-normalized.

    Columns of Z are scaled to unit norm and then conditioned by a column-pivoted QR
    that drops numerically dependent columns. Zero columns count as dependent.
    Returns (values, vectors, rank_deficient).
    """
    alpha, beta = interval
    n = a_matrix.shape[0]
    if z.shape[1] == 0:
        return np.zeros(0), np.zeros((n, 0)), False

    norms = np.linalg.norm(z, axis=0)
    nonzero = norms > 0
    if not nonzero.any():
        logger.warning(f"Projection basis has only zero columns ({z.shape[1]})")
        return np.zeros(0), np.zeros((n, 0)), True
    # Z blocks can differ in scale by many orders of magnitude
    scaled = z[:, nonzero] / norms[nonzero]
    q_z, r_z, _ = qr(scaled, mode="economic", pivoting=True)
    r_diag = np.abs(np.diag(r_z))
    rank = int(np.count_nonzero(r_diag > RANK_TOL * r_diag[0]))
    rank_deficient = rank < z.shape[1]
    if rank_deficient:
        logger.warning(f"Projection basis is rank deficient: kept {rank} of {z.shape[1]} columns")
    q_z = q_z[:, :rank]

    projected_a = q_z.T @ (a_matrix @ q_z)
    projected_m = q_z.T @ (m_matrix @ q_z)
    projected_a = 0.5 * (projected_a + projected_a.T)
    projected_m = 0.5 * (projected_m + projected_m.T)
    try:
        values, coeffs = eigh(projected_a, projected_m)
    except np.linalg.LinAlgError:
        # drop directions where the projected mass is numerically zero
        mass_values, mass_vectors = eigh(projected_m)
        usable = mass_values > RANK_TOL * mass_values[-1]
        logger.warning(f"Projected mass matrix is singular; dropping {int((~usable).sum())} directions")
        scaling = mass_vectors[:, usable] / np.sqrt(mass_values[usable])
        values, inner = eigh(scaling.T @ projected_a @ scaling)
        coeffs = scaling @ inner
        rank_deficient = True

    keep = (values >= alpha) & (values <= beta)
    vectors = q_z @ coeffs[:, keep]
    values = values[keep]
    m_norms = np.sqrt(np.abs(np.einsum("ij,ij->j", vectors, m_matrix @ vectors)))
    return values, vectors / m_norms, rank_deficient


def rf_ddes_solve(cfg: RfDdesConfig, a_matrix: sp.spmatrix, m_matrix: sp.spmatrix) -> EigResult:
    """End-to-end RF-DDES. Every failure is raised as PhaseError naming the phase."""
    if a_matrix.shape != m_matrix.shape:
        raise DimensionMismatchError(f"A is {a_matrix.shape} but M is {m_matrix.shape}")
    a_csr, m_csr = sp.csr_matrix(a_matrix), sp.csr_matrix(m_matrix)
    timings: Dict[str, float] = {}
    f = make_filter(cfg.rule, cfg.alpha, cfg.beta, cfg.n_c)
    logger.info(f"RF-DDES on n={a_csr.shape[0]}: [{cfg.alpha}, {cfg.beta}], sigma={cfg.sigma}, p={cfg.p}, "
                f"N_c={cfg.n_c}, nev_B={cfg.nev_b}, psi={cfg.psi}")

    with phase("partition", timings):
        meta = partition_pencil(a_csr, m_csr, cfg.p, cfg.partition_seed)
        dd = split_blocks(a_csr, m_csr, meta)
    with phase("interior", timings):
        nev_b = [cfg.nev_b_for(j) for j in range(meta.p)]
        spaces = interior_eigenspaces(dd, cfg.sigma, nev_b, cfg.seed, cfg.workers)
    with phase("schur", timings):
        schur_set = build_schur_set(dd, f, cfg.workers)
    with phase("interface", timings):
        basis = interface_lanczos(schur_set, f, cfg.tol, cfg.max_iter, cfg.check_every, cfg.seed)
    with phase("projection", timings):
        interior = build_interior_subspace(dd, cfg.sigma, basis, cfg.psi, spaces, cfg.workers)
        z = assemble_Z(meta, interior.V, interior.Sigma, interior.Gamma, basis.Q, cfg.psi)
    with phase("rayleigh_ritz", timings):
        values, vectors, rank_deficient = rayleigh_ritz(permute(a_csr, meta), permute(m_csr, meta), z,
                                                        (cfg.alpha, cfg.beta))
        vectors = vectors[meta.iperm]

    logger.info(f"RF-DDES: {values.size} pairs, mu={basis.mu}, dim(Z)={z.shape[1]}, s={meta.n_interface}")
    return EigResult(
        values=values,
        vectors=vectors,
        residuals=residual_norms(a_csr, m_csr, values, vectors),
        method="rfddes",
        iterations=basis.mu,
        converged=basis.converged,
        dim_z=z.shape[1],
        s=meta.n_interface,
        d=meta.d.tolist(),
        rank_deficient=rank_deficient,
        trace_history=basis.trace_history,
        timings=timings,
    )
