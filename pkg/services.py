import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

import settings
from errors import ReferenceUnavailableError
from models import EigResult, KrylovConfig, MatrixInfo, RfDdesConfig, RunRecord
from complex_solver import build_schur_set
from oracle import (block_inverse, dense_gen_eig, filtered_schur_matrix, filtered_spectral_schur, interface_rank,
                    max_relative_error, rank_filtered_schur, interior_bound_report)
from partitioner import partition_pencil
from pencil_blocks import reassemble, split_blocks
from rational_filter import filter_samples, make_filter
from repositories import MatrixRepository
from rf_ddes import rf_ddes_solve
from rf_krylov import rf_krylov_solve
from sparse_core import SparseSym, fd_laplacian_eigenvalues, gen_fd_laplacian, random_sparse_pencil

logger = logging.getLogger(__name__)

# Purpose: Business layer shared by the command line and the HTTP API. It resolves matrix
# names through the repository, validates requests (raising ValueError-family errors the
# callers translate into HTTP statuses or exit codes), runs the solvers and shapes their
# output into RunRecords and comparison tables.


class EigenService:
    """Service layer for matrix generation, solves and accuracy comparisons."""

    def __init__(self, repository: MatrixRepository):
        self.repository = repository

    # --- Matrices --- #
    def generate_fd(self, name: str, nx: int, ny: int, overwrite: bool = False) -> MatrixInfo:
        logger.info(f"Generating {nx}x{ny} finite-difference Laplacian as '{name}'")
        return self.repository.add(name, gen_fd_laplacian(nx, ny), overwrite=overwrite)

    def load(self, name: str) -> SparseSym:
        """Raises LookupError when the name is unknown."""
        matrix = self.repository.get(name)
        if matrix is None:
            raise LookupError(f"Matrix '{name}' not found.")
        return matrix

    def load_pencil(self, a_name: str, m_name: Optional[str]) -> Tuple[SparseSym, SparseSym]:
        a_matrix = self.load(a_name)
        if m_name is None:
            return a_matrix, sp.identity(a_matrix.shape[0], format="csr")
        m_matrix = self.load(m_name)
        if m_matrix.shape != a_matrix.shape:
            raise ValueError(f"'{a_name}' is {a_matrix.shape} but '{m_name}' is {m_matrix.shape}")
        return a_matrix, m_matrix

    # --- Solves --- #
    @staticmethod
    def solve_pencil(method: str, a_matrix, m_matrix, config: Dict[str, Any]) -> Tuple[EigResult, Dict]:
        """Validates the config for `method` and runs the solver; returns (result, config echo)."""
        if method == "rfddes":
            cfg = RfDdesConfig(**config)
            return rf_ddes_solve(cfg, a_matrix, m_matrix), cfg.model_dump()
        if method == "rfkrylov":
            cfg = KrylovConfig(**config)
            f = make_filter(cfg.rule, cfg.alpha, cfg.beta, cfg.n_c)
            result = rf_krylov_solve(a_matrix, m_matrix, f, cfg.tol, cfg.max_iter, cfg.check_every,
                                     cfg.seed, cfg.workers)
            return result, cfg.model_dump()
        raise ValueError(f"Unknown method '{method}'")

    def solve(self, method: str, a_name: str, m_name: Optional[str], config: Dict[str, Any]) -> RunRecord:
        a_matrix, m_matrix = self.load_pencil(a_name, m_name)
        result, echo = self.solve_pencil(method, a_matrix, m_matrix, config)
        return build_record(method, {"A": a_name, "M": m_name}, echo, result)

    # --- Diagnostics --- #
    def partition_stats(self, a_name: str, m_name: Optional[str], p: int, seed: int = 0) -> Dict[str, Any]:
        a_matrix, m_matrix = self.load_pencil(a_name, m_name)
        return partition_pencil(a_matrix, m_matrix, p, seed).stats()

    @staticmethod
    def filter_curve(alpha: float, beta: float, n_c: int, rule: str, lo: Optional[float] = None,
                     hi: Optional[float] = None, num: int = 401, scaled: bool = False) -> List[Dict[str, float]]:
        f = make_filter(rule, alpha, beta, n_c)
        width = beta - alpha
        lo = alpha - width if lo is None else lo
        hi = beta + width if hi is None else hi
        grid, values = filter_samples(f, lo, hi, num, scaled)
        return [{"z": float(z), "abs_rho": float(v)} for z, v in zip(grid, values)]


def build_record(method: str, inputs: Dict[str, Optional[str]], config: Dict[str, Any],
                 result: EigResult) -> RunRecord:
    return RunRecord(method=method, inputs=inputs, config=config, result=result.summary(),
                     timings=dict(result.timings))


def reference_eigenvalues(a_matrix, m_matrix, alpha: float, beta: float,
                          mesh: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Exact eigenvalues in [alpha, beta]: analytic for an FD mesh, dense otherwise.

    Raises:
        ReferenceUnavailableError: no mesh given and n exceeds the dense cap.
    """
    if mesh is not None:
        values = fd_laplacian_eigenvalues(*mesh)
    else:
        n = a_matrix.shape[0]
        if n > settings.DENSE_CAP:
            raise ReferenceUnavailableError(
                f"n={n} exceeds the dense cap {settings.DENSE_CAP}; pass the mesh size to use "
                f"analytic finite-difference eigenvalues"
            )
        values = dense_gen_eig(a_matrix, m_matrix).values
    return values[(values >= alpha) & (values <= beta)]


def compare_grid(a_matrix, m_matrix, base: Dict[str, Any], nev_b_values: List[int], psi_values: List[int],
                 reference: np.ndarray) -> List[Dict[str, Any]]:
    """Max relative error of RF-DDES for every (nev_B, psi) cell."""
    rows = []
    for nev_b in nev_b_values:
        row: Dict[str, Any] = {"nev_b": nev_b}
        for psi in psi_values:
            cfg = RfDdesConfig(**{**base, "nev_b": nev_b, "psi": psi})
            result = rf_ddes_solve(cfg, a_matrix, m_matrix)
            row[f"psi={psi}"] = max_relative_error(result.values, reference, cfg.beta)
            logger.info(f"compare: nev_B={nev_b}, psi={psi}: max relative error {row[f'psi={psi}']:.3e}")
        rows.append(row)
    return rows


# --- Verification suites --- #

SUITES = ("identity", "rank", "bounds")


def _random_case(seed: int, nx: int, ny: int, p: int = 2):
    a_matrix, m_matrix = random_sparse_pencil(nx, ny, seed)
    meta = partition_pencil(a_matrix, m_matrix, p, seed)
    dd = split_blocks(a_matrix, m_matrix, meta)
    reference = dense_gen_eig(a_matrix, m_matrix)
    return a_matrix, m_matrix, dd, reference


def _lowest_interval(values: np.ndarray, nev: int) -> Tuple[float, float]:
    """Interval holding the nev lowest eigenvalues with margins at half the adjacent gaps."""
    lower = values[0] - 0.5 * (values[1] - values[0])
    upper = 0.5 * (values[nev - 1] + values[nev])
    return float(lower), float(upper)


def _relative_frobenius(left: np.ndarray, right: np.ndarray) -> float:
    scale = np.linalg.norm(right)
    return float(np.linalg.norm(left - right) / scale) if scale else float(np.linalg.norm(left))


def verify_identity(count: int = 10, seed: int = 0, n_c: int = 8, nev: int = 10, shifts: int = 5) -> List[Dict]:
    """Filtered-Schur spectral identity and block-inverse identity on random n=50 pencils."""
    cases = []
    for k in range(count):
        a_matrix, m_matrix, dd, reference = _random_case(seed + k, 10, 5)
        alpha, beta = _lowest_interval(reference.values, nev)
        f = make_filter("midpoint", alpha, beta, n_c)
        ss = build_schur_set(dd, f)
        filtered = 2.0 * filtered_schur_matrix(ss, f)
        schur_error = _relative_frobenius(filtered, filtered_spectral_schur(reference, dd.meta, f))

        rng = np.random.default_rng(seed + k)
        a_perm, m_perm = reassemble(dd).toarray(), reassemble(dd, mass=True).toarray()
        inverse_errors = []
        for _ in range(shifts):
            zeta = f.center + f.radius * np.exp(1j * rng.uniform(0.05, np.pi - 0.05))
            exact = np.linalg.inv(a_perm - zeta * m_perm)
            inverse_errors.append(_relative_frobenius(block_inverse(dd, zeta), exact))
        cases.append({"seed": seed + k, "s": dd.n_interface, "filtered_schur_error": schur_error,
                      "block_inverse_error": max(inverse_errors),
                      "passed": schur_error <= 1e-9 and max(inverse_errors) <= 1e-9})
    return cases


def verify_rank(count: int = 10, seed: int = 0, n_c: int = 8, nev: int = 10) -> List[Dict]:
    """rank([y_1..y_nev]) <= numerical rank of the filtered Schur matrix <= s."""
    cases = []
    for k in range(count):
        _, _, dd, reference = _random_case(seed + k, 10, 5)
        alpha, beta = _lowest_interval(reference.values, nev)
        f = make_filter("midpoint", alpha, beta, n_c)
        _, rank = rank_filtered_schur(dd, f)
        rank_y = interface_rank(reference, dd.meta, reference.in_interval(alpha, beta))
        cases.append({"seed": seed + k, "s": dd.n_interface, "rank_y": rank_y, "rank_filtered": rank,
                      "passed": rank_y <= rank <= dd.n_interface})
    return cases


def verify_bounds(count: int = 10, seed: int = 0, sigma: float = 0.0, psi_values=(1, 2, 3),
                  kappa_values=(0, 5, 10)) -> List[Dict]:
    """Interior approximation bounds for every eigenpair of random n=40 pencils."""
    cases = []
    for k in range(count):
        _, _, dd, reference = _random_case(seed + k, 8, 5)
        for psi in psi_values:
            for kappa in kappa_values:
                rows = interior_bound_report(dd, reference, sigma, psi, kappa)
                violations = sum(1 for row in rows if row["ok"] is False)
                flagged = sum(1 for row in rows if row["flagged"])
                cases.append({"seed": seed + k, "psi": psi, "kappa": kappa, "pairs": len(rows),
                              "violations": violations, "flagged": flagged, "passed": violations == 0})
    return cases


def run_verify_suite(suite: str, count: int = 10, seed: int = 0) -> Dict[str, Any]:
    if suite == "identity":
        cases = verify_identity(count, seed)
    elif suite == "rank":
        cases = verify_rank(count, seed)
    elif suite == "bounds":
        cases = verify_bounds(count, seed)
    else:
        raise ValueError(f"Unknown suite '{suite}', expected one of {SUITES}")
    passed = all(case["passed"] for case in cases)
    logger.info(f"Verification suite '{suite}': {len(cases)} cases, passed={passed}")
    return {"suite": suite, "passed": passed, "cases": cases}
