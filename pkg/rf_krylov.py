import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, schur

from complex_solver import apply_filtered_resolvent_full, factor_pencil_shifts
from errors import DimensionMismatchError, MassNotSPDError
from models import EigResult
from rational_filter import RationalFilter
from sparse_core import residual_norms

logger = logging.getLogger(__name__)

# Purpose: RF-KRYLOV baseline. Arnoldi with full orthogonalization on the filtered
# operator rho(M^{-1}A) = 2 Re sum_l w_l (A - zeta_l M)^{-1} M. The eigenvalues of the
# Hessenberg matrix H that are >= 1/2 are the filtered images of the wanted eigenvalues;
# their sum is tracked every `check_every` steps and the iteration stops once it settles.

FILTER_THRESHOLD = 0.5
BREAKDOWN_TOL = 1e-12
INITIAL_CAPACITY = 128


@dataclass
class ArnoldiState:
    basis: np.ndarray  # n x (capacity + 1), first mu + 1 columns valid
    hessenberg: np.ndarray  # (capacity + 1) x capacity
    mu: int = 0
    trace_history: List[float] = field(default_factory=list)
    converged: bool = False
    breakdowns: int = 0

    @property
    def q(self) -> np.ndarray:
        return self.basis[:, :self.mu]

    @property
    def h(self) -> np.ndarray:
        return self.hessenberg[:self.mu, :self.mu]


def trace_settled(history: List[float], tol: float) -> bool:
    """Two consecutive check points agree to relative tol (two zeros also count)."""
    if len(history) < 2:
        return False
    previous, current = history[-2], history[-1]
    scale = max(abs(previous), abs(current))
    if scale == 0.0:
        return True
    return abs(current - previous) <= tol * scale


def orthogonalize(basis: np.ndarray, w: np.ndarray, passes: int = 2):
    """Classical Gram-Schmidt repeated `passes` times; returns (w, coefficients)."""
    coeffs = np.zeros(basis.shape[1])
    for _ in range(passes):
        h = basis.T @ w
        w = w - basis @ h
        coeffs += h
    return w, coeffs


def random_orthogonal_vector(basis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Unit vector orthogonal to the columns of `basis` (breakdown replacement)."""
    for _ in range(10):
        w, _ = orthogonalize(basis, rng.standard_normal(basis.shape[0]))
        norm = np.linalg.norm(w)
        if norm > 1e-8:
            return w / norm
    raise ArithmeticError("could not draw a vector outside the current basis")


def filtered_trace(h: np.ndarray) -> float:
    """Sum of the eigenvalues of H with real part >= 1/2."""
    if h.size == 0:
        return 0.0
    theta = np.linalg.eigvals(h).real
    return float(theta[theta >= FILTER_THRESHOLD].sum())


def _grow(state: ArnoldiState, needed: int, limit: int) -> None:
    capacity = state.hessenberg.shape[1]
    if needed <= capacity:
        return
    new_capacity = min(max(2 * capacity, needed), limit)
    basis = np.zeros((state.basis.shape[0], new_capacity + 1))
    basis[:, :capacity + 1] = state.basis
    hessenberg = np.zeros((new_capacity + 1, new_capacity))
    hessenberg[:capacity + 1, :capacity] = state.hessenberg
    state.basis, state.hessenberg = basis, hessenberg


def arnoldi(apply_op, n: int, tol: float, max_iter: int, check_every: int,
            rng: np.random.Generator) -> ArnoldiState:
    capacity = min(max_iter, INITIAL_CAPACITY)
    state = ArnoldiState(basis=np.zeros((n, capacity + 1)), hessenberg=np.zeros((capacity + 1, capacity)))
    q = rng.uniform(-1.0, 1.0, n)
    state.basis[:, 0] = q / np.linalg.norm(q)

    for step in range(max_iter):
        _grow(state, step + 1, max_iter)
        current = state.basis[:, :step + 1]
        w = apply_op(state.basis[:, step])
        scale = np.linalg.norm(w)
        w, coeffs = orthogonalize(current, w)
        state.hessenberg[:step + 1, step] = coeffs
        beta = np.linalg.norm(w)
        state.mu = step + 1

        if state.mu % check_every == 0 or state.mu == n:
            state.trace_history.append(filtered_trace(state.h))
            logger.debug(f"Arnoldi step {state.mu}: filtered trace {state.trace_history[-1]:.12g}")
            if trace_settled(state.trace_history, tol):
                state.converged = True
                break
        if state.mu == n:
            # the basis spans the whole space
            state.converged = True
            break

        if beta <= BREAKDOWN_TOL * max(scale, 1e-300):
            state.breakdowns += 1
            logger.debug(f"Arnoldi breakdown at step {state.mu}, injecting a random vector")
            state.hessenberg[step + 1, step] = 0.0
            state.basis[:, step + 1] = random_orthogonal_vector(state.basis[:, :step + 1], rng)
        else:
            state.hessenberg[step + 1, step] = beta
            state.basis[:, step + 1] = w / beta
    return state


def extract_ritz_pairs(a_matrix: sp.spmatrix, m_matrix: sp.spmatrix, f: RationalFilter,
                       state: ArnoldiState):
    """Rayleigh-Ritz on (A, M) over the invariant subspace of H for eigenvalues >= 1/2."""
    if state.mu == 0:
        return np.zeros(0), np.zeros((a_matrix.shape[0], 0))
    _, schur_vectors, selected = schur(state.h, output="real",
                                       sort=lambda re, im: re >= FILTER_THRESHOLD)
    if selected == 0:
        return np.zeros(0), np.zeros((a_matrix.shape[0], 0))
    x = state.q @ schur_vectors[:, :selected]
    try:
        values, coeffs = eigh(x.T @ (a_matrix @ x), x.T @ (m_matrix @ x))
    except np.linalg.LinAlgError as exc:
        raise MassNotSPDError(f"projected mass matrix is not positive definite: {exc}") from exc
    vectors = x @ coeffs

    slack = (f.beta - f.alpha) * 1e-8
    keep = (values >= f.alpha - slack) & (values <= f.beta + slack)
    if not np.all(keep):
        logger.debug(f"Discarded {int((~keep).sum())} Ritz values outside [{f.alpha}, {f.beta}]")
    return values[keep], vectors[:, keep]


def rf_krylov_solve(a_matrix: sp.spmatrix, m_matrix: sp.spmatrix, f: RationalFilter,
                    tol: float = 1e-6, max_iter: Optional[int] = None, check_every: int = 10,
                    seed: int = 0, workers: int = 1) -> EigResult:
    """Eigenpairs of (A, M) in [alpha, beta] by filtered Arnoldi.

    Hitting max_iter returns the pairs available at that point with converged=False.
    An interval without eigenvalues gives an empty result.
    """
    if a_matrix.shape != m_matrix.shape:
        raise DimensionMismatchError(f"A is {a_matrix.shape} but M is {m_matrix.shape}")
    n = a_matrix.shape[0]
    max_iter = n if max_iter is None else min(max_iter, n)
    a_csr, m_csr = sp.csr_matrix(a_matrix), sp.csr_matrix(m_matrix)
    timings = {}

    started = time.perf_counter()
    facts = factor_pencil_shifts(a_csr, m_csr, f, workers)
    timings["factorization"] = time.perf_counter() - started

    started = time.perf_counter()
    state = arnoldi(lambda v: apply_filtered_resolvent_full(facts, f, m_csr, v), n, tol,
                    max_iter, check_every, np.random.default_rng(seed))
    timings["arnoldi"] = time.perf_counter() - started
    if not state.converged:
        logger.warning(f"RF-KRYLOV stopped at max_iter={max_iter} before the filtered trace settled")

    started = time.perf_counter()
    values, vectors = extract_ritz_pairs(a_csr, m_csr, f, state)
    timings["rayleigh_ritz"] = time.perf_counter() - started

    logger.info(f"RF-KRYLOV: {values.size} pairs after {state.mu} iterations "
                f"(converged={state.converged}, breakdowns={state.breakdowns})")
    return EigResult(
        values=values,
        vectors=vectors,
        residuals=residual_norms(a_csr, m_csr, values, vectors),
        method="rfkrylov",
        iterations=state.mu,
        converged=state.converged,
        dim_z=state.mu,
        trace_history=state.trace_history,
        timings=timings,
    )
