import csv
import io
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cholesky, eigh, inv, lstsq, svd

from complex_solver import SchurSet, apply_filtered_schur, build_schur_set
from errors import DenseCapError, MassNotSPDError
from partitioner import PartitionMeta
from pencil_blocks import DDPencil, shifted_blocks
from rational_filter import RationalFilter, eval_filter
from sparse_core import to_dense

logger = logging.getLogger(__name__)

# Purpose: Dense reference computations. Nothing here is fast; everything here is
# straightforward enough to check the sparse solvers against:
#   - the full eigendecomposition of (A, M) and its interior/interface split,
#   - the explicitly formed filtered Schur matrix and its singular values,
#   - dense assemblies of the block inverse and of spectral expansions,
#   - the interior approximation bounds (plain, resolvent-expanded, deflated),
#   - relative eigenvalue errors against a reference spectrum.

RANK_THRESHOLD = 1e-10
SCHUR_CAP = 2000


@dataclass
class FullEigenReference:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # M-orthonormal columns, original ordering

    @property
    def n(self) -> int:
        return int(self.values.size)

    def split(self, meta: PartitionMeta) -> Tuple[np.ndarray, np.ndarray]:
        """(U, Y): interior and interface parts of every eigenvector (permuted ordering)."""
        permuted = self.vectors[meta.perm]
        return permuted[:meta.n_interior], permuted[meta.n_interior:]

    def in_interval(self, alpha: float, beta: float) -> np.ndarray:
        return np.flatnonzero((self.values >= alpha) & (self.values <= beta))


def dense_gen_eig(a_matrix, m_matrix, cap: Optional[int] = None) -> FullEigenReference:
    """All eigenpairs of (A, M) via Cholesky reduction of M and a dense symmetric solve.

    Raises:
        DenseCapError: n exceeds the dense cap.
        MassNotSPDError: the Cholesky factorization of M fails.
    """
    a_dense, m_dense = to_dense(a_matrix, cap), to_dense(m_matrix, cap)
    try:
        values, vectors = eigh(a_dense, m_dense)
    except LinAlgError as exc:
        raise MassNotSPDError(f"M is not symmetric positive definite: {exc}") from exc
    logger.debug(f"Dense reference for n={values.size}: [{values[0] if values.size else 0:.6g}, "
                 f"{values[-1] if values.size else 0:.6g}]")
    return FullEigenReference(values=values, vectors=vectors)


# --- Filtered Schur matrix --- #

def filtered_schur_matrix(ss: SchurSet, f: RationalFilter) -> np.ndarray:
    """Re sum_l w_l S_zeta_l^{-1}, formed column by column."""
    return apply_filtered_schur(ss, f, np.eye(ss.s))


def rank_filtered_schur(dd: DDPencil, f: RationalFilter, workers: int = 1,
                        ss: Optional[SchurSet] = None) -> Tuple[np.ndarray, int]:
    """Singular values of the filtered Schur matrix and its rank at 1e-10 * sigma_1."""
    s = dd.n_interface
    if s == 0:
        return np.zeros(0), 0
    if s > SCHUR_CAP:
        raise DenseCapError(s, SCHUR_CAP)
    ss = ss if ss is not None else build_schur_set(dd, f, workers)
    singular_values = svd(filtered_schur_matrix(ss, f), compute_uv=False)
    rank = numerical_rank(singular_values)
    logger.info(f"Filtered Schur matrix: s={s}, numerical rank {rank}")
    return singular_values, rank


def numerical_rank(singular_values: np.ndarray, threshold: float = RANK_THRESHOLD) -> int:
    if singular_values.size == 0 or singular_values[0] == 0:
        return 0
    return int(np.count_nonzero(singular_values > threshold * singular_values[0]))


def interface_rank(reference: FullEigenReference, meta: PartitionMeta, indices: Sequence[int]) -> int:
    """Numerical rank of [y_i for i in indices] from its singular values at RANK_THRESHOLD."""
    _, y = reference.split(meta)
    block = y[:, list(indices)]
    if block.size == 0:
        return 0
    return numerical_rank(svd(block, compute_uv=False))


# --- Dense identities --- #

def block_inverse(dd: DDPencil, zeta: complex) -> np.ndarray:
    """(A - zeta M)^{-1} in the permuted ordering, assembled from B_zeta^{-1} and S_zeta^{-1}."""
    shifted = shifted_blocks(dd, zeta)
    offsets = dd.meta.interior_offsets
    d = dd.meta.n_interior
    b_inv = np.zeros((d, d), dtype=np.complex128)
    for j in range(dd.p):
        window = slice(int(offsets[j]), int(offsets[j + 1]))
        if window.stop > window.start:
            b_inv[window, window] = inv(shifted.B[j].toarray())
    coupling = np.zeros((d, dd.n_interface), dtype=np.complex128)
    interface = dd.meta.interface_offsets
    for j in range(dd.p):
        coupling[offsets[j]:offsets[j + 1], interface[j]:interface[j + 1]] = shifted.E_hat[j].toarray()
    schur = shifted.C.toarray() - coupling.T @ b_inv @ coupling
    s_inv = inv(schur) if schur.size else np.zeros((0, 0), dtype=np.complex128)
    x = b_inv @ coupling
    return np.block([[b_inv + x @ s_inv @ x.T, -x @ s_inv], [-s_inv @ x.T, s_inv]])


def spectral_resolvent(reference: FullEigenReference, zeta: complex) -> np.ndarray:
    """sum_i x_i x_i^T / (lambda_i - zeta)."""
    return (reference.vectors / (reference.values - zeta)) @ reference.vectors.T


def filtered_spectral_schur(reference: FullEigenReference, meta: PartitionMeta, f: RationalFilter) -> np.ndarray:
    """sum_i rho(lambda_i) y_i y_i^T, equal to 2 Re sum_l w_l S_zeta_l^{-1}."""
    _, y = reference.split(meta)
    return (y * eval_filter(f, reference.values)) @ y.T


# --- Interior approximation bounds --- #

def _m_norm(chol_upper: np.ndarray, x: np.ndarray) -> float:
    return float(np.linalg.norm(chol_upper @ x))


def _projection_error(chol_upper: np.ndarray, u: np.ndarray, basis: np.ndarray) -> float:
    """min_g ||u - g||_{M_B} over g in span(basis)."""
    if basis.shape[1] == 0:
        return _m_norm(chol_upper, u)
    coeffs, *_ = lstsq(chol_upper @ basis, chol_upper @ u)
    return _m_norm(chol_upper, u - basis @ coeffs)


def _resolvent_columns(b_sigma: np.ndarray, m_b: np.ndarray, start: np.ndarray, psi: int) -> np.ndarray:
    columns = [np.linalg.solve(b_sigma, start)]
    for _ in range(psi - 1):
        columns.append(np.linalg.solve(b_sigma, m_b @ columns[-1]))
    return np.column_stack(columns)


def interior_bound_report(dd: DDPencil, reference: FullEigenReference, sigma: float, psi: int,
                         kappa: int, indices: Optional[Iterable[int]] = None) -> List[Dict]:
    """Per-eigenpair LHS/RHS of the three interior approximation bounds.

    For u (interior part) and y (interface part) of each reference eigenvector:
      plain:     u_hat = -B_sigma^{-1} E_sigma y
      expanded:  M_B-projection onto span{U1, U2} (psi resolvent terms each)
      deflated:  as expanded plus the kappa eigenvectors of (B, M_B) nearest sigma.
    Rows where sigma coincides with an eigenvalue of (B, M_B) are flagged and not checked.
    """
    b = dd.interior().toarray()
    m_b = dd.interior(mass=True).toarray()
    e = dd.coupling().toarray()
    m_e = dd.coupling(mass=True).toarray()
    b_sigma = b - sigma * m_b
    e_sigma = e - sigma * m_e
    chol_upper = cholesky(m_b, lower=False)

    delta, v = eigh(b, m_b)
    order = np.argsort(np.abs(delta - sigma), kind="stable")
    delta, v = delta[order], v[:, order]
    kappa = min(kappa, delta.size)
    scale = max(np.max(np.abs(delta)), abs(sigma), 1.0)
    singular_shift = bool(np.any(np.abs(delta - sigma) <= 1e-14 * scale))

    u_all, y_all = reference.split(dd.meta)
    indices = range(reference.n) if indices is None else indices
    rows = []
    for i in indices:
        lam, u, y = float(reference.values[i]), u_all[:, i], y_all[:, i]
        e_y, me_y = e_sigma @ y, m_e @ y
        norm_e_y = float(np.linalg.norm(v.T @ e_y))
        norm_me_y = float(np.linalg.norm(v.T @ me_y))
        gap_lam = np.abs(lam - delta)
        gap_sigma = np.abs(sigma - delta)
        dist = abs(lam - sigma)
        row = {"index": int(i), "lambda": lam, "sigma": sigma, "psi": psi, "kappa": kappa,
               "flagged": singular_shift}
        tol = 1e-10 * max(_m_norm(chol_upper, u), float(np.linalg.norm(y)), 1e-300)

        if singular_shift:
            row.update({key: float("nan") for key in
                        ("plain_lhs", "plain_rhs", "expanded_lhs", "expanded_rhs", "deflated_lhs", "deflated_rhs")})
            row["ok"] = None
            rows.append(row)
            continue

        with np.errstate(divide="ignore"):
            u_hat = -np.linalg.solve(b_sigma, e_y)
            row["plain_lhs"] = _m_norm(chol_upper, u - u_hat)
            row["plain_rhs"] = float(np.max(dist / (gap_lam * gap_sigma)) * norm_e_y
                                     + np.max(dist / gap_lam) * norm_me_y) if delta.size else 0.0

            u1 = _resolvent_columns(b_sigma, m_b, e_y, psi)
            u2 = _resolvent_columns(b_sigma, m_b, me_y, psi)
            expanded = np.hstack([u1, u2])
            row["expanded_lhs"] = _projection_error(chol_upper, u, expanded)
            row["expanded_rhs"] = _expanded_bound(dist, gap_lam, gap_sigma, psi, norm_e_y, norm_me_y)

            deflated = np.hstack([expanded, v[:, :kappa]])
            row["deflated_lhs"] = _projection_error(chol_upper, u, deflated)
            row["deflated_rhs"] = _expanded_bound(dist, gap_lam[kappa:], gap_sigma[kappa:], psi,
                                                  norm_e_y, norm_me_y)

        row["ok"] = all(row[f"{name}_lhs"] <= row[f"{name}_rhs"] * (1 + 1e-8) + tol
                        for name in ("plain", "expanded", "deflated"))
        rows.append(row)

    violations = sum(1 for row in rows if row["ok"] is False)
    logger.info(f"Bound report: {len(rows)} pairs, {violations} violations (psi={psi}, kappa={kappa})")
    return rows


theorem_bound_report = interior_bound_report


def _expanded_bound(dist: float, gap_lam: np.ndarray, gap_sigma: np.ndarray, psi: int,
                    norm_e_y: float, norm_me_y: float) -> float:
    if gap_lam.size == 0:
        return 0.0
    denom = gap_lam * gap_sigma ** psi
    return float(np.max(dist ** psi / denom) * norm_e_y + np.max(dist ** (psi + 1) / denom) * norm_me_y)


def bounds_to_csv(rows: List[Dict]) -> str:
    fields = ["index", "lambda", "sigma", "psi", "kappa", "plain_lhs", "plain_rhs", "expanded_lhs",
              "expanded_rhs", "deflated_lhs", "deflated_rhs", "flagged", "ok"]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: row.get(key) for key in fields})
    return buffer.getvalue()


# --- Accuracy against a reference spectrum --- #

def relative_errors(values: np.ndarray, reference_values: np.ndarray, beta: float) -> np.ndarray:
    """|lambda_hat_k - lambda_k| / |lambda_k| for the k-th smallest of each set.

    A reference eigenvalue without a computed partner contributes (beta - lambda_k)/|lambda_k|,
    the smallest error any value left outside the interval could have.
    """
    computed = np.sort(np.asarray(values, dtype=np.float64))
    reference_values = np.sort(np.asarray(reference_values, dtype=np.float64))
    denom = np.maximum(np.abs(reference_values), np.finfo(float).tiny)
    errors = np.empty(reference_values.size)
    paired = min(computed.size, reference_values.size)
    errors[:paired] = np.abs(computed[:paired] - reference_values[:paired]) / denom[:paired]
    errors[paired:] = (beta - reference_values[paired:]) / denom[paired:]
    return errors


def max_relative_error(values: np.ndarray, reference_values: np.ndarray, beta: float) -> float:
    errors = relative_errors(values, reference_values, beta)
    return float(errors.max()) if errors.size else 0.0
