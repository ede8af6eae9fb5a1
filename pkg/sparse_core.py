import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.io import mminfo, mmwrite

import settings
from errors import DenseCapError, DimensionMismatchError, MatrixFormatError

logger = logging.getLogger(__name__)

# Purpose: Storage conventions for the sparse symmetric matrices A and M, Matrix Market
# ingestion/output, model problems (finite-difference Laplacian, random pencils) and the
# dense conversions used by the oracle and small-scale tests.
#
# A SparseSym is a scipy CSR matrix holding the FULL symmetric pattern (both triangles),
# float64 values, sorted column indices and no duplicate entries.

SparseSym = sp.csr_matrix

PathLike = Union[str, Path]


@dataclass(frozen=True)
class DensePencilView:
    """Dense copies of a pencil, bit-identical to the sparse sources."""

    a_dense: np.ndarray
    m_dense: np.ndarray


def as_sparse_sym(matrix, check: bool = True) -> SparseSym:
    """Normalizes any sparse/dense square matrix into the canonical SparseSym layout.

    Raises:
        DimensionMismatchError: the matrix is not square.
        MatrixFormatError: ``check`` is set and the matrix is not exactly symmetric.
    """
    csr = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
    if csr.shape[0] != csr.shape[1]:
        raise DimensionMismatchError(f"matrix must be square, got shape {csr.shape}")
    csr.sum_duplicates()
    csr.eliminate_zeros()
    csr.sort_indices()
    if check and not is_symmetric(csr):
        raise MatrixFormatError("matrix is not symmetric")
    return csr


def is_symmetric(matrix: sp.spmatrix) -> bool:
    """Exact symmetry test: max |A_ij - A_ji| == 0."""
    return (matrix != matrix.T).nnz == 0


# --- Matrix Market I/O --- #

def load_matrix_market(path: PathLike) -> SparseSym:
    """Reads a real coordinate Matrix Market file into a SparseSym.

    The header is validated with ``scipy.io.mminfo``; entries are parsed with numpy so the
    declared entry count can be checked against the file body. Symmetric files are
    expanded to the full pattern, general files must be exactly symmetric.

    Raises:
        FileNotFoundError: the path does not exist.
        MatrixFormatError: malformed header or entries, non-square, complex/pattern field,
            unsupported symmetry qualifier, entry-count mismatch, or out-of-range indices.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"matrix file not found: {path}")

    try:
        rows, cols, entries, fmt, field, symmetry = mminfo(str(path))
    except Exception as exc:
        raise MatrixFormatError(f"{path.name}: malformed Matrix Market header ({exc})") from exc

    if fmt != "coordinate":
        raise MatrixFormatError(f"{path.name}: only coordinate format is supported, got {fmt}")
    if field not in ("real", "integer"):
        raise MatrixFormatError(f"{path.name}: field '{field}' is not supported (real only)")
    if symmetry not in ("general", "symmetric"):
        raise MatrixFormatError(f"{path.name}: symmetry '{symmetry}' is not supported")
    if rows != cols:
        raise MatrixFormatError(f"{path.name}: matrix is not square ({rows}x{cols})")

    try:
        # The size line parses as the first 3-column row, entries follow.
        body = np.loadtxt(path, comments="%", ndmin=2)
    except ValueError as exc:
        raise MatrixFormatError(f"{path.name}: malformed entry lines ({exc})") from exc
    if body.shape[1] != 3:
        raise MatrixFormatError(f"{path.name}: expected 'row col value' entries")

    data = body[1:]
    if data.shape[0] != entries:
        raise MatrixFormatError(
            f"{path.name}: header declares {entries} entries but the file contains {data.shape[0]}"
        )

    i = data[:, 0].astype(np.int64) - 1
    j = data[:, 1].astype(np.int64) - 1
    v = data[:, 2]
    if entries and (i.min() < 0 or j.min() < 0 or i.max() >= rows or j.max() >= cols):
        raise MatrixFormatError(f"{path.name}: entry index out of range")

    if symmetry == "symmetric":
        off = i != j
        i, j, v = (np.concatenate((i, j[off])), np.concatenate((j, i[off])),
                   np.concatenate((v, v[off])))

    matrix = sp.coo_matrix((v, (i, j)), shape=(rows, cols)).tocsr()
    matrix = as_sparse_sym(matrix, check=False)
    if not is_symmetric(matrix):
        raise MatrixFormatError(f"{path.name}: general-qualified matrix is not symmetric")
    logger.info(f"Loaded {path.name}: n={rows}, stored entries={matrix.nnz}")
    return matrix


def save_matrix_market(path: PathLike, matrix: sp.spmatrix) -> Path:
    """Writes the full stored pattern as 'coordinate real general'."""
    path = Path(path)
    with open(path, "wb") as handle:
        mmwrite(handle, sp.coo_matrix(matrix), field="real", symmetry="general")
    logger.debug(f"Wrote {path} ({matrix.nnz} entries)")
    return path


# --- Model problems --- #

def _second_difference(k: int) -> sp.csr_matrix:
    return (2.0 * sp.identity(k) - sp.eye(k, k, 1) - sp.eye(k, k, -1)).tocsr()


def gen_fd_laplacian(nx: int, ny: int) -> SparseSym:
    """Unscaled 5-point Laplacian on an nx-by-ny interior grid (Dirichlet boundary).

    Vertex (ix, iy) has index ix + nx*iy. Diagonal 4, neighbours -1.
    """
    if nx < 1 or ny < 1:
        raise ValueError(f"grid counts must be >= 1, got ({nx}, {ny})")
    laplacian = sp.kron(sp.identity(ny), _second_difference(nx)) + sp.kron(
        _second_difference(ny), sp.identity(nx)
    )
    return as_sparse_sym(laplacian, check=False)


def fd_laplacian_eigenvalues(nx: int, ny: int) -> np.ndarray:
    """Ascending analytic eigenvalues 4 - 2cos(i*pi/(nx+1)) - 2cos(j*pi/(ny+1))."""
    lam_x = 2.0 - 2.0 * np.cos(np.arange(1, nx + 1) * np.pi / (nx + 1))
    lam_y = 2.0 - 2.0 * np.cos(np.arange(1, ny + 1) * np.pi / (ny + 1))
    return np.sort(np.add.outer(lam_y, lam_x).ravel())


def fd_laplacian_eigenpairs(nx: int, ny: int, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """The `count` lowest analytic eigenpairs of gen_fd_laplacian(nx, ny).

    Vector (a, b) is sin(a*pi*(ix+1)/(nx+1)) * sin(b*pi*(iy+1)/(ny+1)) at vertex ix + nx*iy,
    scaled to unit 2-norm.
    """
    modes_x = np.arange(1, nx + 1)
    modes_y = np.arange(1, ny + 1)
    lam = np.add.outer(2.0 - 2.0 * np.cos(modes_y * np.pi / (ny + 1)),
                       2.0 - 2.0 * np.cos(modes_x * np.pi / (nx + 1))).ravel()
    order = np.argsort(lam, kind="stable")[:count]
    b_modes, a_modes = np.divmod(order, nx)
    sin_x = np.sqrt(2.0 / (nx + 1)) * np.sin(np.outer(np.arange(1, nx + 1), a_modes + 1) * np.pi / (nx + 1))
    sin_y = np.sqrt(2.0 / (ny + 1)) * np.sin(np.outer(np.arange(1, ny + 1), b_modes + 1) * np.pi / (ny + 1))
    vectors = (sin_y[:, None, :] * sin_x[None, :, :]).reshape(nx * ny, order.size)
    return lam[order], vectors


def analytic_interval(nx: int, ny: int, nev: int) -> Tuple[float, float]:
    """Interval [0, beta] holding exactly the nev lowest FD eigenvalues.

    beta is the midpoint between the nev-th and (nev+1)-th analytic eigenvalue.
    """
    values = fd_laplacian_eigenvalues(nx, ny)
    if nev < 1 or nev > values.size:
        raise ValueError(f"nev must lie in [1, {values.size}], got {nev}")
    if nev == values.size:
        return 0.0, float(values[-1] + 1.0)
    lower, upper = values[nev - 1], values[nev]
    if upper - lower <= 1e-12 * upper:
        raise ValueError(f"lambda_{nev} and lambda_{nev + 1} coincide on a {nx}x{ny} grid")
    return 0.0, float(0.5 * (lower + upper))


def random_sparse_pencil(nx: int, ny: int, seed: int = 0,
                         identity_mass: bool = False) -> Tuple[SparseSym, SparseSym]:
    """Random symmetric A and SPD M sharing the nx-by-ny grid pattern.

    M is strictly diagonally dominant with a positive diagonal, hence SPD, and has
    off-diagonal couplings so the interface block M_E is nonzero after partitioning.
    """
    rng = np.random.default_rng(seed)
    pattern = gen_fd_laplacian(nx, ny)
    n = pattern.shape[0]
    upper = sp.triu(pattern, k=1).tocoo()

    a_off = sp.coo_matrix((rng.uniform(-1.0, 1.0, upper.nnz), (upper.row, upper.col)), shape=(n, n))
    a_matrix = a_off + a_off.T + sp.diags(rng.uniform(0.0, 4.0, n))

    if identity_mass:
        m_matrix = sp.identity(n)
    else:
        m_off = sp.coo_matrix((rng.uniform(-0.2, 0.2, upper.nnz), (upper.row, upper.col)), shape=(n, n))
        m_off = (m_off + m_off.T).tocsr()
        row_sums = np.asarray(abs(m_off).sum(axis=1)).ravel()
        m_matrix = m_off + sp.diags(row_sums + rng.uniform(0.5, 1.5, n))

    return as_sparse_sym(a_matrix), as_sparse_sym(m_matrix)


# --- Products and dense views --- #

def spmv(matrix: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    """Sparse matrix-vector (or matrix-block) product with a shape check."""
    x = np.asarray(x)
    if x.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"spmv: matrix has {matrix.shape[1]} columns, vector has {x.shape[0]} rows")
    return matrix @ x


def to_dense(matrix, cap: Optional[int] = None) -> np.ndarray:
    """Dense copy of a (sparse) matrix, guarded by the dense cap."""
    cap = settings.DENSE_CAP if cap is None else cap
    n = matrix.shape[0]
    if n > cap:
        raise DenseCapError(n, cap)
    if sp.issparse(matrix):
        return matrix.toarray()
    return np.array(matrix, copy=True)


def dense_pencil(a_matrix, m_matrix, cap: Optional[int] = None) -> DensePencilView:
    return DensePencilView(a_dense=to_dense(a_matrix, cap), m_dense=to_dense(m_matrix, cap))


def residual_norms(a_matrix, m_matrix, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Per-pair ||A x - lambda M x||_2 / ||x||_M."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return np.zeros(0)
    m_x = m_matrix @ vectors
    resid = a_matrix @ vectors - m_x * values
    m_norms = np.sqrt(np.abs(np.einsum("ij,ij->j", vectors, m_x)))
    return np.linalg.norm(resid, axis=0) / m_norms
