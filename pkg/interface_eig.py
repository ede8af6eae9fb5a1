import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from complex_solver import SchurSet, apply_filtered_schur
from rational_filter import RationalFilter
from rf_krylov import BREAKDOWN_TOL, orthogonalize, random_orthogonal_vector, trace_settled

logger = logging.getLogger(__name__)

# Purpose: Interface basis Q. Lanczos with full reorthogonalization on the filtered Schur
# operator Re sum_l w_l S_zeta_l^{-1}, whose range contains the interface parts
# y_1, ..., y_nev of the wanted eigenvectors. The iteration stops when the trace of the
# tridiagonal T (the sum of ALL its eigenvalues, no 1/2 threshold) stops changing.


@dataclass
class InterfaceBasis:
    Q: np.ndarray  # s x mu, orthonormal columns
    a: np.ndarray  # diagonal of T, length mu
    b: np.ndarray  # off-diagonal of T, length mu - 1
    mu: int
    trace_history: List[float] = field(default_factory=list)
    converged: bool = True
    breakdowns: int = 0

    @property
    def s(self) -> int:
        return self.Q.shape[0]

    def tridiagonal(self) -> np.ndarray:
        if self.mu == 0:
            return np.zeros((0, 0))
        return np.diag(self.a) + np.diag(self.b, 1) + np.diag(self.b, -1)

    @classmethod
    def empty(cls, s: int = 0) -> "InterfaceBasis":
        return cls(Q=np.zeros((s, 0)), a=np.zeros(0), b=np.zeros(0), mu=0)


def interface_lanczos(ss: SchurSet, f: RationalFilter, tol: float = 1e-6,
                      max_iter: Optional[int] = None, check_every: int = 10,
                      seed: int = 0) -> InterfaceBasis:
    """Runs the filtered Lanczos process; never raises on non-convergence.

    A basis that hit max_iter is returned with converged=False.
    """
    s = ss.s
    if s == 0:
        logger.info("No interface variables; interface basis is empty")
        return InterfaceBasis.empty()
    max_iter = s if max_iter is None else min(max_iter, s)

    rng = np.random.default_rng(seed)
    q = rng.uniform(-1.0, 1.0, s)
    q /= np.linalg.norm(q)
    q_prev = np.zeros(s)
    b_cur = 0.0

    basis = np.zeros((s, max_iter))
    diag: List[float] = []
    offdiag: List[float] = []
    history: List[float] = []
    converged = False
    breakdowns = 0

    for step in range(max_iter):
        basis[:, step] = q
        w = apply_filtered_schur(ss, f, q) - b_cur * q_prev
        scale = np.linalg.norm(w)
        a_mu = float(w @ q)
        w = w - a_mu * q
        w, _ = orthogonalize(basis[:, :step + 1], w)
        diag.append(a_mu)
        mu = step + 1

        if mu % check_every == 0 or mu == s:
            history.append(float(np.sum(diag)))
            logger.debug(f"Lanczos step {mu}: trace {history[-1]:.12g}")
            if trace_settled(history, tol):
                converged = True
                break
        if mu == s:
            converged = True
            break

        b_next = float(np.linalg.norm(w))
        q_prev = q
        if b_next <= BREAKDOWN_TOL * max(scale, 1e-300):
            breakdowns += 1
            logger.debug(f"Lanczos breakdown at step {mu}, injecting a random vector")
            q = random_orthogonal_vector(basis[:, :mu], rng)
            b_next = 0.0
        else:
            q = w / b_next
        offdiag.append(b_next)
        b_cur = b_next

    mu = len(diag)
    if not converged:
        logger.warning(f"Interface Lanczos hit max_iter={max_iter} before the trace settled")
    logger.info(f"Interface Lanczos: mu={mu}, s={s}, converged={converged}")
    return InterfaceBasis(Q=basis[:, :mu].copy(), a=np.asarray(diag), b=np.asarray(offdiag[:mu - 1]),
                          mu=mu, trace_history=history, converged=converged, breakdowns=breakdowns)
